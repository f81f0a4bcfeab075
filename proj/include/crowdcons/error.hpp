#pragma once

#include <stdexcept>
#include <string>

namespace crowdcons {

// Base for every error raised by the library. InputError covers bad or
// inconsistent user input (CLI exit code 2); InvariantViolation signals a
// broken internal guarantee (exit code 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

#define CROWDCONS_INPUT_ERROR(Name)                  \
    class Name : public InputError {                 \
    public:                                          \
        using InputError::InputError;                \
    }

CROWDCONS_INPUT_ERROR(ParseError);
CROWDCONS_INPUT_ERROR(IoError);
CROWDCONS_INPUT_ERROR(MissingAnnotation);
CROWDCONS_INPUT_ERROR(AnswerCountMismatch);
CROWDCONS_INPUT_ERROR(InvalidProbability);
CROWDCONS_INPUT_ERROR(InvalidThreshold);
CROWDCONS_INPUT_ERROR(EmptyQuestion);
CROWDCONS_INPUT_ERROR(EmptyNode);
CROWDCONS_INPUT_ERROR(EmptyTrainingSet);
CROWDCONS_INPUT_ERROR(DimensionMismatch);
CROWDCONS_INPUT_ERROR(InvalidConfig);
CROWDCONS_INPUT_ERROR(FormatVersionMismatch);
CROWDCONS_INPUT_ERROR(NoPositives);
CROWDCONS_INPUT_ERROR(LengthMismatch);
CROWDCONS_INPUT_ERROR(MissingPrediction);
CROWDCONS_INPUT_ERROR(InvalidBudget);
CROWDCONS_INPUT_ERROR(InvalidCounts);
CROWDCONS_INPUT_ERROR(KeyMismatch);
CROWDCONS_INPUT_ERROR(Overflow);

#undef CROWDCONS_INPUT_ERROR

}  // namespace crowdcons
