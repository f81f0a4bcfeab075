#include "crowdcons/cli.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "crowdcons/allocation.hpp"
#include "crowdcons/answers.hpp"
#include "crowdcons/corpus.hpp"
#include "crowdcons/error.hpp"
#include "crowdcons/evalmetrics.hpp"
#include "crowdcons/features.hpp"
#include "crowdcons/forest.hpp"
#include "crowdcons/random.hpp"
#include "crowdcons/synthetic.hpp"
#include "io_util.hpp"

namespace crowdcons {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
json optional_to_json(const std::optional<T>& value) {
    return value ? json(*value) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void to_json(json& j, const RunConfig& c) {
    j = json{{"command", c.command},
             {"corpus", c.corpus.string()},
             {"annotations", c.annotations ? json(c.annotations->string()) : json(nullptr)},
             {"format", c.format},
             {"answers_per_question", c.answers_per_question},
             {"skip_malformed", c.skip_malformed},
             {"source_tag", c.source_tag},
             {"image_features", c.image_features ? json(c.image_features->string()) : json(nullptr)},
             {"model", c.model.string()},
             {"out_dir", c.out_dir.string()},
             {"thresholds", c.thresholds},
             {"mode", c.mode},
             {"layout", c.layout},
             {"trees", c.trees},
             {"features_per_split", optional_to_json(c.features_per_split)},
             {"min_leaf_size", c.min_leaf_size},
             {"max_depth", optional_to_json(c.max_depth)},
             {"threads", c.threads},
             {"seed", c.seed},
             {"s", c.min_answers},
             {"r", c.max_answers},
             {"budgets", c.budgets},
             {"sim", c.sim},
             {"trials", c.trials},
             {"status_quo_seeds", c.status_quo_seeds},
             {"cost_per_answer", c.cost_per_answer},
             {"seconds_per_answer", c.seconds_per_answer},
             {"synth_questions", c.synth_questions},
             {"synth_holdout", c.synth_holdout},
             {"synth_noise", c.synth_noise}};
}

void from_json(const json& j, RunConfig& c) {
    RunConfig d;
    c.command = j.at("command").get<std::string>();
    c.corpus = j.value("corpus", d.corpus.string());
    if (auto a = optional_from_json<std::string>(j, "annotations")) c.annotations = *a;
    c.format = j.value("format", d.format);
    c.answers_per_question = j.value("answers_per_question", d.answers_per_question);
    c.skip_malformed = j.value("skip_malformed", d.skip_malformed);
    c.source_tag = j.value("source_tag", d.source_tag);
    if (auto f = optional_from_json<std::string>(j, "image_features")) c.image_features = *f;
    c.model = j.value("model", d.model.string());
    c.out_dir = j.value("out_dir", d.out_dir.string());
    c.thresholds = j.value("thresholds", d.thresholds);
    c.mode = j.value("mode", d.mode);
    c.layout = j.value("layout", d.layout);
    c.trees = j.value("trees", d.trees);
    c.features_per_split = optional_from_json<std::size_t>(j, "features_per_split");
    c.min_leaf_size = j.value("min_leaf_size", d.min_leaf_size);
    c.max_depth = optional_from_json<std::size_t>(j, "max_depth");
    c.threads = j.value("threads", d.threads);
    c.seed = j.value("seed", d.seed);
    c.min_answers = j.value("s", d.min_answers);
    c.max_answers = j.value("r", d.max_answers);
    c.budgets = j.value("budgets", d.budgets);
    c.sim = j.value("sim", d.sim);
    c.trials = j.value("trials", d.trials);
    c.status_quo_seeds = j.value("status_quo_seeds", d.status_quo_seeds);
    c.cost_per_answer = j.value("cost_per_answer", d.cost_per_answer);
    c.seconds_per_answer = j.value("seconds_per_answer", d.seconds_per_answer);
    c.synth_questions = j.value("synth_questions", d.synth_questions);
    c.synth_holdout = j.value("synth_holdout", d.synth_holdout);
    c.synth_noise = j.value("synth_noise", d.synth_noise);
}

void save_run_config(const RunConfig& config, const fs::path& path) {
    auto out = detail::open_output(path);
    out << json(config).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

RunConfig load_run_config(const fs::path& path) {
    const auto text = detail::read_file(path);
    try {
        return json::parse(text).get<RunConfig>();
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::size_t> resolve_budgets(const std::vector<std::string>& tokens, std::size_t n) {
    std::vector<std::size_t> budgets;
    if (tokens.empty()) {
        for (std::size_t p = 0; p <= 100; p += 10) budgets.push_back(n * p / 100);
        return budgets;
    }
    for (const auto& raw : tokens) {
        const std::string_view token = detail::trim(raw);
        std::size_t value = 0;
        if (!token.empty() && token.back() == '%') {
            double percent = 0.0;
            if (!detail::parse_number(token.substr(0, token.size() - 1), percent) || percent < 0.0 || percent > 100.0) {
                throw InvalidBudget("bad budget percentage '" + raw + "'");
            }
            value = static_cast<std::size_t>(std::floor(percent * static_cast<double>(n) / 100.0 + 1e-9));
        } else if (token == "N" || token == "n") {
            value = n;
        } else if (!detail::parse_number(token, value)) {
            throw InvalidBudget("bad budget '" + raw + "'");
        }
        if (value > n) throw InvalidBudget("budget " + raw + " exceeds " + std::to_string(n) + " questions");
        budgets.push_back(value);
    }
    return budgets;
}

namespace {

Corpus load_corpus_from(const RunConfig& config) {
    if (config.corpus.empty()) throw IoError("no corpus given (--corpus)");
    const auto format = parse_corpus_format(config.format);
    if (!format) throw InvalidConfig("unknown corpus format '" + config.format + "'");
    LoadOptions options;
    options.format = *format;
    options.answers_per_question = config.answers_per_question;
    options.skip_malformed = config.skip_malformed;
    options.source_tag = config.source_tag;
    return load_corpus(config.corpus, config.annotations, options);
}

ImageFeatureTable load_images_from(const RunConfig& config) {
    return config.image_features ? load_image_features(*config.image_features) : ImageFeatureTable{};
}

fs::path model_path(const RunConfig& config) {
    return config.model.empty() ? config.out_dir / "model.json" : config.model;
}

std::vector<AgreementLabel> labels_for(const Corpus& corpus) {
    std::vector<AgreementLabel> labels;
    labels.reserve(corpus.size());
    for (const auto& q : corpus.questions()) labels.push_back(agreement_label(q, corpus.answers_per_question()));
    return labels;
}

std::vector<Prediction> predict_corpus(const ForestModel& model, const Corpus& corpus,
                                       const ImageFeatureTable& images) {
    if (!model.vocab) throw InvalidConfig("model file carries no vocabularies");
    const auto x = extract_matrix(corpus, *model.vocab, images, model.feature_mode, model.layout);
    if (x.cols() != model.forest.input_dimension()) {
        throw DimensionMismatch("features have " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(model.forest.input_dimension()));
    }
    std::vector<Prediction> predictions;
    predictions.reserve(corpus.size());
    for (std::size_t r = 0; r < x.rows(); ++r) predictions.push_back(model.forest.predict(x.row(r)));
    return predictions;
}

std::string stratum_file_name(const std::string& stratum) {
    std::string name = stratum;
    std::replace(name.begin(), name.end(), '/', '_');
    return name;
}

void write_curve(const PrCurve& curve, const fs::path& path) {
    auto out = detail::open_output(path);
    out << "threshold,recall,precision\n";
    for (const auto& p : curve.points) {
        out << detail::format_double(p.threshold) << ',' << detail::format_double(p.recall) << ','
            << detail::format_double(p.precision) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void cmd_analyze(const RunConfig& config, std::ostream& log) {
    const Corpus corpus = load_corpus_from(config);
    for (const auto m : config.thresholds) {
        const auto histogram = diversity_histogram(corpus, m);
        const auto path = config.out_dir / ("histogram_m" + std::to_string(m) + ".csv");
        auto out = detail::open_output(path);
        out << "m,k,count\n";
        for (std::size_t k = 0; k < histogram.size(); ++k) out << m << ',' << k << ',' << histogram[k] << '\n';
        log << "wrote " << path.string() << '\n';
    }
    const auto rates = agreement_by_answer_type(corpus);
    const auto path = config.out_dir / "answer_types.csv";
    auto out = detail::open_output(path);
    out << "answer_type,unanimous,exactly_one,at_most_one,n\n";
    for (const auto& [type, r] : rates) {
        out << type << ',' << detail::format_double(r.unanimous) << ','
            << detail::format_double(r.exactly_one_disagreement) << ','
            << detail::format_double(r.at_most_one_disagreement) << ',' << r.n << '\n';
    }
    log << "wrote " << path.string() << " (" << corpus.size() << " questions";
    if (corpus.skipped_malformed() > 0) log << ", " << corpus.skipped_malformed() << " malformed skipped";
    log << ")\n";
}

void cmd_vocab(const RunConfig& config, std::ostream& log) {
    const auto vocab = build_vocabularies(load_corpus_from(config));
    const auto path = config.out_dir / "vocab.json";
    save_vocabularies(vocab, path);
    log << "wrote " << path.string() << " (|V1|=" << vocab.first().size() << ", |V2|=" << vocab.second().size()
        << ")\n";
}

void cmd_train(const RunConfig& config, std::ostream& log) {
    const auto mode = parse_feature_mode(config.mode);
    const auto layout = parse_feature_layout(config.layout);
    if (!mode) throw InvalidConfig("unknown feature mode '" + config.mode + "'");
    if (!layout) throw InvalidConfig("unknown feature layout '" + config.layout + "'");

    const Corpus corpus = load_corpus_from(config);
    const ImageFeatureTable images = load_images_from(config);
    Vocabularies vocab = build_vocabularies(corpus);
    const auto x = extract_matrix(corpus, vocab, images, *mode, *layout);
    const auto y = labels_for(corpus);

    ForestConfig forest_config;
    forest_config.n_trees = config.trees;
    forest_config.features_per_split = config.features_per_split;
    forest_config.min_leaf_size = config.min_leaf_size;
    forest_config.max_depth = config.max_depth;
    forest_config.seed = config.seed;
    forest_config.threads = config.threads;

    ForestModel model;
    model.forest = train_forest(x, y, forest_config);
    model.vocab = std::move(vocab);
    model.feature_mode = *mode;
    model.layout = *layout;

    const fs::path target = model_path(config);
    const fs::path vocab_target = config.out_dir / "vocab.json";
    fs::path staging = target;
    staging += ".partial";
    try {
        save_model(model, staging);
        save_vocabularies(*model.vocab, vocab_target);
        fs::rename(staging, target);
    } catch (...) {
        std::error_code ec;
        fs::remove(staging, ec);
        fs::remove(vocab_target, ec);
        throw;
    }
    log << "trained " << config.trees << " trees on " << corpus.size() << " questions (" << x.cols()
        << " features, mode " << config.mode << "); wrote " << target.string() << '\n';
}

void cmd_predict(const RunConfig& config, std::ostream& log) {
    const Corpus corpus = load_corpus_from(config);
    const auto predictions = predict_corpus(load_model(model_path(config)), corpus, load_images_from(config));
    const auto path = config.out_dir / "predictions.csv";
    auto out = detail::open_output(path);
    out << "question_id,label,p_disagreement\n";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        out << corpus.questions()[i].question_id << ',' << to_string(predictions[i].label) << ','
            << detail::format_double(predictions[i].p_disagreement) << '\n';
    }
    log << "wrote " << path.string() << '\n';
}

void cmd_eval(const RunConfig& config, std::ostream& log) {
    const Corpus corpus = load_corpus_from(config);
    const auto predictions = predict_corpus(load_model(model_path(config)), corpus, load_images_from(config));
    std::vector<double> scores;
    std::vector<std::optional<AnswerType>> types;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        scores.push_back(predictions[i].p_disagreement);
        types.push_back(corpus.questions()[i].answer_type);
    }
    const auto labels = labels_for(corpus);
    const auto report = stratified_eval(scores, labels, types);

    write_curve(pr_curve(scores, labels), config.out_dir / "pr_curve.csv");
    std::map<std::string, std::pair<std::vector<double>, std::vector<AgreementLabel>>> strata;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto& [s, l] = strata[types[i] ? std::string(to_string(*types[i])) : "unknown"];
        s.push_back(scores[i]);
        l.push_back(labels[i]);
    }
    for (const auto& [name, stratum] : strata) {
        if (!report.ap_by_type.contains(name)) continue;
        write_curve(pr_curve(stratum.first, stratum.second),
                    config.out_dir / ("pr_curve_" + stratum_file_name(name) + ".csv"));
    }

    const json doc = {{"ap_overall", report.ap_overall},
                      {"ap_by_type", report.ap_by_type},
                      {"n_by_type", report.n_by_type}};
    const auto path = config.out_dir / "report.json";
    auto out = detail::open_output(path);
    out << doc.dump(2) << '\n';
    log << "AP overall " << detail::format_double(report.ap_overall);
    for (const auto& [name, ap] : report.ap_by_type) log << ", " << name << ' ' << detail::format_double(ap);
    log << "\nwrote " << path.string() << '\n';
}

struct ScoredCorpus {
    Corpus corpus;
    std::unordered_map<QuestionId, double> scores;
};

ScoredCorpus score_corpus(const RunConfig& config) {
    ScoredCorpus sc{load_corpus_from(config), {}};
    const auto predictions = predict_corpus(load_model(model_path(config)), sc.corpus, load_images_from(config));
    for (std::size_t i = 0; i < sc.corpus.size(); ++i) {
        sc.scores.emplace(sc.corpus.questions()[i].question_id, predictions[i].p_disagreement);
    }
    return sc;
}

void cmd_allocate(const RunConfig& config, std::ostream& log) {
    const auto sc = score_corpus(config);
    const auto budgets = resolve_budgets(config.budgets, sc.corpus.size());
    if (budgets.size() != 1) throw InvalidBudget("allocate needs exactly one budget (--budgets)");
    const auto ids = question_ids(sc.corpus);
    const auto ranking = rank_by_disagreement(sc.scores, ids);
    const auto plan = make_plan(ranking, budgets.front(), config.min_answers, config.max_answers,
                                sc.corpus.answers_per_question());
    const auto path = config.out_dir / "plan.csv";
    auto out = detail::open_output(path);
    out << "question_id,answer_count,p_disagreement\n";
    for (const auto id : ranking.order) {
        out << id << ',' << plan.assignments.at(id) << ',' << detail::format_double(sc.scores.at(id)) << '\n';
    }
    log << "budget " << plan.budget << ": " << plan.total_answers() << " answers; wrote " << path.string() << '\n';
}

void cmd_sweep(const RunConfig& config, std::ostream& log) {
    const auto sc = score_corpus(config);
    const auto sim = parse_simulation_mode(config.sim);
    if (!sim) throw InvalidConfig("unknown simulation mode '" + config.sim + "'");
    if (config.status_quo_seeds == 0) throw InvalidConfig("--status-quo-seeds must be >= 1");
    const auto ids = question_ids(sc.corpus);

    std::vector<RankingFamily> families;
    families.push_back({"ours", {rank_by_disagreement(sc.scores, ids)}});
    RankingFamily status_quo{"status_quo", {}};
    for (std::size_t k = 0; k < config.status_quo_seeds; ++k) {
        status_quo.rankings.push_back(status_quo_ranking(ids, derive_seed(config.seed, k)));
    }
    families.push_back(std::move(status_quo));
    families.push_back({"oracle", {oracle_ranking(sc.corpus, config.min_answers, config.max_answers)}});

    SweepOptions options;
    options.budgets = resolve_budgets(config.budgets, sc.corpus.size());
    options.min_answers = config.min_answers;
    options.max_answers = config.max_answers;
    options.mode = *sim;
    options.trials = config.trials;
    options.seed = config.seed;
    const auto rows = sweep(sc.corpus, families, options);

    const auto sweep_path = config.out_dir / "sweep.csv";
    auto out = detail::open_output(sweep_path);
    out << "ranking,budget,answers_spent,diversity,diversity_fraction\n";
    for (const auto& r : rows) {
        out << r.ranking << ',' << r.budget << ',' << r.answers_spent << ',' << detail::format_double(r.diversity)
            << ',' << detail::format_double(r.diversity_fraction) << '\n';
    }

    auto costs = detail::open_output(config.out_dir / "sweep_costs.csv");
    costs << "ranking,budget,answers_spent,cost_usd,work_hours\n";
    for (const auto& r : rows) {
        const double spent = static_cast<double>(r.answers_spent);
        costs << r.ranking << ',' << r.budget << ',' << r.answers_spent << ','
              << detail::format_double(spent * config.cost_per_answer) << ','
              << detail::format_double(spent * config.seconds_per_answer / 3600.0) << '\n';
    }

    auto plot = detail::open_output(config.out_dir / "plot_data.csv");
    plot << "series,x,y\n";
    for (const auto& r : rows) {
        plot << r.ranking << ',' << r.answers_spent << ',' << detail::format_double(r.diversity_fraction) << '\n';
    }

    for (const double level : {0.7, 0.82}) {
        const auto ours = answers_to_reach(rows, "ours", level);
        const auto base = answers_to_reach(rows, "status_quo", level);
        if (ours && base && *base > 0.0) {
            log << "answers to reach " << level * 100 << "% diversity: ours " << *ours << ", status quo " << *base
                << " (" << (1.0 - *ours / *base) * 100.0 << "% fewer)\n";
        }
    }
    log << "wrote " << sweep_path.string() << '\n';
}

void cmd_synth(const RunConfig& config, std::ostream& log) {
    PlantedOptions options;
    options.questions = config.synth_questions;
    options.noise_rate = config.synth_noise;
    options.answers_per_question = config.answers_per_question;
    options.seed = config.seed;
    if (config.synth_holdout > options.questions) throw InvalidConfig("holdout larger than corpus");
    const auto data = make_planted_corpus(options);

    std::vector<std::size_t> order(data.corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(config.seed, 0x5eed));
    rng.shuffle(std::span(order));
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.synth_holdout));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(config.synth_holdout), order.end());

    write_jsonl(data.corpus.subset(train), config.out_dir / "train.jsonl");
    write_jsonl(data.corpus.subset(test), config.out_dir / "test.jsonl");
    std::vector<ImageId> images;
    for (const auto& q : data.corpus.questions()) images.push_back(q.image_id);
    write_image_features(data.images, images, config.out_dir / "image_features.csv");
    log << "wrote " << train.size() << " training and " << test.size() << " held-out questions to "
        << config.out_dir.string() << '\n';
}

}  // namespace

void run_command(const RunConfig& config, std::ostream& log) {
    static const std::map<std::string, void (*)(const RunConfig&, std::ostream&)> commands{
        {"analyze", cmd_analyze}, {"vocab", cmd_vocab}, {"train", cmd_train},   {"predict", cmd_predict},
        {"eval", cmd_eval},       {"allocate", cmd_allocate}, {"sweep", cmd_sweep}, {"synth", cmd_synth}};
    const auto it = commands.find(config.command);
    if (it == commands.end()) throw InvalidConfig("unknown command '" + config.command + "'");
    it->second(config, log);
    save_run_config(config, config.out_dir / "run_config.json");
}

int exit_code_for_current_exception(std::ostream& err) {
    try {
        throw;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 3;
    } catch (...) {
        err << "internal error\n";
        return 3;
    }
}

}  // namespace crowdcons
