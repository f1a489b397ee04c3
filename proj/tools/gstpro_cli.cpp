// gstpro: synthesis, masking, training, scoring and evaluation for the
// DG-NCDE forecaster with the rolling-Gaussian anomaly scorer.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gstpro/checkpoint.hpp"
#include "gstpro/config.hpp"
#include "gstpro/metrics.hpp"
#include "gstpro/pipeline.hpp"
#include "gstpro/rng.hpp"
#include "gstpro/series.hpp"
#include "gstpro/trainer.hpp"

namespace fs = std::filesystem;
using namespace gstpro;

namespace {

SeriesDataset head_rows(const SeriesDataset& d, int count) {
    SeriesDataset out;
    out.start_index = d.start_index;
    out.channel_names = d.channel_names;
    out.values = Matrix(count, d.channels());
    out.mask = Matrix(count, d.channels());
    for (int t = 0; t < count; ++t)
        for (int c = 0; c < d.channels(); ++c) {
            out.values(t, c) = d.values(t, c);
            out.mask(t, c) = d.mask(t, c);
        }
    return out;
}

struct TrainingArtifacts {
    Checkpoint checkpoint;
    TrainResult result;
};

TrainingArtifacts run_training(RunConfig cfg, const SeriesDataset& raw) {
    cfg.model.n_channels = raw.channels();
    const int val_len = std::max(1, static_cast<int>(raw.length() * cfg.train.val_ratio));
    if (raw.length() - val_len < cfg.model.window + 1)
        throw std::invalid_argument("train: series too short for the configured window and validation split");

    // The normalizer sees the training split only; validation stays unseen.
    Normalizer norm = fit_normalizer(head_rows(raw, raw.length() - val_len));
    SeriesDataset normed = normalize(raw, norm);

    DgNcdeModel model = DgNcdeModel::init(cfg.model, cfg.train.seed);
    TrainResult result = train(model, normed, cfg.train);

    TrainingArtifacts art;
    art.checkpoint.model = std::move(model);
    art.checkpoint.normalizer = std::move(norm);
    art.checkpoint.channel_names = raw.channel_names;
    art.checkpoint.scorer_window = cfg.scorer_window;
    art.checkpoint.sigma_floor = cfg.sigma_floor;
    art.checkpoint.val_ratio = cfg.train.val_ratio;
    art.result = std::move(result);
    return art;
}

std::vector<int> align_labels(const ScoresSeries& scores, const LabelSeries& labels) {
    std::vector<int> out;
    out.reserve(scores.timestamps.size());
    for (long long ts : scores.timestamps) {
        const long long idx = ts - labels.start_index;
        if (idx < 0 || idx >= static_cast<long long>(labels.labels.size()))
            throw std::runtime_error("eval: no label for timestamp " + std::to_string(ts));
        out.push_back(labels.labels[idx]);
    }
    return out;
}

ScorerKind parse_scorer(const std::string& name) {
    if (name == "gaussian") return ScorerKind::kGaussian;
    if (name == "recon_pca") return ScorerKind::kReconPca;
    if (name == "dist_kmeans") return ScorerKind::kDistKmeans;
    throw CLI::ValidationError("--scorer must be gaussian, recon_pca or dist_kmeans");
}

std::vector<double> parse_rate_list(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    std::stringstream ss(text);
    while (std::getline(ss, cur, ',')) {
        if (cur.empty()) continue;
        size_t pos = 0;
        double r = std::stod(cur, &pos);
        if (pos != cur.size() || r < 0.0 || r > 1.0)
            throw CLI::ValidationError("--rates entries must be numbers in [0,1]");
        out.push_back(r);
    }
    if (out.empty()) throw CLI::ValidationError("--rates is empty");
    return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> out;
    const size_t dots = text.find("..");
    if (dots != std::string::npos) {
        uint64_t lo = std::stoull(text.substr(0, dots));
        uint64_t hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw CLI::ValidationError("--seeds range is reversed");
        for (uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::string cur;
    std::stringstream ss(text);
    while (std::getline(ss, cur, ',')) {
        if (cur.empty()) continue;
        out.push_back(std::stoull(cur));
    }
    if (out.empty()) throw CLI::ValidationError("--seeds is empty");
    return out;
}

void write_sweep_svg(const std::string& path, const std::vector<double>& rates, const std::vector<double>& roc_mean,
                     const std::vector<double>& prc_mean) {
    const double w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 50;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto sx = [&](double rate) { return ml + pw * rate; };
    auto sy = [&](double v) { return mt + ph * (1.0 - v); };

    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    for (int i = 0; i <= 10; ++i) {
        const double v = i / 10.0;
        f << "<line x1='" << ml << "' y1='" << sy(v) << "' x2='" << w - mr << "' y2='" << sy(v)
          << "' stroke='#dddddd'/>\n";
        f << "<text x='" << ml - 8 << "' y='" << sy(v) + 4 << "' font-size='11' text-anchor='end'>" << v
          << "</text>\n";
        f << "<text x='" << sx(v) << "' y='" << h - mb + 16 << "' font-size='11' text-anchor='middle'>" << v
          << "</text>\n";
    }
    f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb << "' stroke='black'/>\n";
    f << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
    f << "<text x='" << ml + pw / 2 << "' y='" << h - 10 << "' font-size='13' text-anchor='middle'>missing rate"
      << "</text>\n";

    auto polyline = [&](const std::vector<double>& ys, const char* color, const char* dash) {
        f << "<polyline fill='none' stroke='" << color << "' stroke-width='2'" << dash << " points='";
        for (size_t i = 0; i < rates.size(); ++i) f << sx(rates[i]) << ',' << sy(ys[i]) << ' ';
        f << "'/>\n";
        for (size_t i = 0; i < rates.size(); ++i)
            f << "<circle cx='" << sx(rates[i]) << "' cy='" << sy(ys[i]) << "' r='3' fill='" << color << "'/>\n";
    };
    polyline(roc_mean, "#1f77b4", "");
    polyline(prc_mean, "#d62728", " stroke-dasharray='6,4'");
    f << "<text x='" << w - mr - 10 << "' y='" << mt + 16
      << "' font-size='12' text-anchor='end' fill='#1f77b4'>ROC-AUC</text>\n";
    f << "<text x='" << w - mr - 10 << "' y='" << mt + 32
      << "' font-size='12' text-anchor='end' fill='#d62728'>PRC-AUC</text>\n";
    f << "</svg>\n";
}

int cmd_synth(int channels, int train_len, int test_len, int segments, uint64_t seed, const std::string& out_dir) {
    SynthResult synth = synth_generate(channels, train_len, test_len, segments, seed);
    fs::create_directories(out_dir);
    write_series_csv(synth.train, out_dir + "/train.csv");
    write_series_csv(synth.test, out_dir + "/test.csv");
    write_labels_csv(synth.test, out_dir + "/labels.csv");
    std::cout << "wrote " << out_dir << "/{train,test,labels}.csv (" << channels << " channels, " << train_len << "+"
              << test_len << " rows)\n";
    return 0;
}

int cmd_mask(const std::string& in_path, double rate, uint64_t seed, const std::string& out_path,
             std::string mask_out) {
    SeriesDataset d = load_series_csv(in_path);  // validates structure
    Matrix drop = generate_mask(d.length(), d.channels(), rate, seed);
    SeriesDataset masked = apply_mask(d, drop);

    // Echo kept cells verbatim so an unmasked pass is byte-stable.
    std::ifstream in(in_path);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    std::string line;
    std::getline(in, line);
    out << line << '\n';
    int t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string field;
        int c = -1;  // timestamp column first
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (c < 0 || masked.mask(t, c) != 0.0) out << field;
                if (i < line.size()) out << ',';
                field.clear();
                ++c;
            } else if (line[i] != '\r') {
                field.push_back(line[i]);
            }
        }
        out << '\n';
        ++t;
    }
    if (mask_out.empty()) mask_out = out_path + ".mask.csv";
    write_mask_csv(masked.mask, masked.start_index, masked.channel_names, mask_out);
    std::cout << "wrote " << out_path << " and " << mask_out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& train_path, const std::string& out_path,
              std::string history_path) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_run_config(config_path);
    const std::string train_file = train_path.empty() ? cfg.train_path : train_path;
    const std::string model_file = out_path.empty() ? cfg.model_path : out_path;
    if (train_file.empty() || model_file.empty()) throw std::runtime_error("train: --train and --out are required");

    SeriesDataset raw = load_series_csv(train_file);
    TrainingArtifacts art = run_training(cfg, raw);
    save_checkpoint(art.checkpoint, model_file);
    if (history_path.empty()) history_path = model_file + ".history.csv";
    write_history_csv(art.result, history_path);
    std::printf("trained %d epochs, best validation loss %.6g at epoch %d\n",
                static_cast<int>(art.result.history.size()), art.result.best_val_loss, art.result.best_epoch);
    return 0;
}

int cmd_score(const std::string& model_path, const std::string& train_path, const std::string& test_path,
              const std::string& out_path, const std::string& alphas_path, const std::string& scorer_name,
              bool parallel) {
    Checkpoint ckpt = load_checkpoint(model_path);
    SeriesDataset train_raw = load_series_csv(train_path);
    SeriesDataset test_raw = load_series_csv(test_path);
    ScoreOptions opts;
    opts.scorer = parse_scorer(scorer_name);
    opts.parallel = parallel;
    ScoreOutput out = run_scoring(ckpt, train_raw, test_raw, opts);
    write_scores_csv(out, out_path);
    if (!alphas_path.empty()) write_alphas_csv(out, ckpt.channel_names, alphas_path);
    std::cout << "wrote " << out.scores.size() << " scores to " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& scores_path, const std::string& labels_path, const std::string& out_path) {
    ScoresSeries scores = load_scores_csv(scores_path);
    LabelSeries labels = load_labels_csv(labels_path);
    EvalReport report = evaluate(scores.scores, align_labels(scores, labels));
    write_report(report, out_path);
    std::printf("roc_auc=%.6g prc_auc=%.6g positives=%lld negatives=%lld\n", report.roc_auc, report.prc_auc,
                report.positives, report.negatives);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& train_path, const std::string& test_path,
              const std::string& labels_path, const std::string& rates_text, const std::string& seeds_text,
              const std::string& out_dir, const std::string& plot_path) {
    RunConfig base = config_path.empty() ? RunConfig{} : parse_run_config(config_path);
    const std::string train_file = train_path.empty() ? base.train_path : train_path;
    const std::string test_file = test_path.empty() ? base.test_path : test_path;
    const std::string labels_file = labels_path.empty() ? base.labels_path : labels_path;
    const std::string dir = out_dir.empty() ? base.out_dir : out_dir;
    if (train_file.empty() || test_file.empty() || labels_file.empty() || dir.empty())
        throw std::runtime_error("sweep: --train, --test, --labels and --out are required");

    std::vector<double> rates = parse_rate_list(rates_text);
    std::vector<uint64_t> seeds = parse_seed_list(seeds_text);

    SeriesDataset train_raw = load_series_csv(train_file);
    SeriesDataset test_raw = load_series_csv(test_file);
    LabelSeries labels = load_labels_csv(labels_file);
    fs::create_directories(dir);

    std::ofstream table(dir + "/sweep.csv");
    if (!table) throw std::runtime_error("cannot write " + dir + "/sweep.csv");
    table << "rate,seed,roc_auc,prc_auc\n";

    std::vector<double> roc_means, prc_means;
    std::ofstream summary(dir + "/summary.csv");
    if (!summary) throw std::runtime_error("cannot write " + dir + "/summary.csv");
    summary << "rate,roc_auc_mean,roc_auc_std,prc_auc_mean,prc_auc_std\n";

    char buf[160];
    for (double rate : rates) {
        std::vector<double> rocs, prcs;
        for (uint64_t seed : seeds) {
            SeriesDataset tr = train_raw;
            SeriesDataset te = test_raw;
            if (rate > 0.0) {
                // Distinct mask streams for the two splits, both derived from the seed.
                tr = apply_mask(train_raw,
                                generate_mask(tr.length(), tr.channels(), rate, splitmix64_at(seed, 1)));
                te = apply_mask(test_raw, generate_mask(te.length(), te.channels(), rate, splitmix64_at(seed, 2)));
            }
            RunConfig cfg = base;
            cfg.train.seed = seed;
            TrainingArtifacts art = run_training(cfg, tr);
            ScoreOptions opts;
            opts.parallel = cfg.train.parallel;
            ScoreOutput so = run_scoring(art.checkpoint, tr, te, opts);

            ScoresSeries ss;
            ss.timestamps = so.timestamps;
            ss.scores = so.scores;
            EvalReport report = evaluate(so.scores, align_labels(ss, labels));
            rocs.push_back(report.roc_auc);
            prcs.push_back(report.prc_auc);
            std::snprintf(buf, sizeof(buf), "%g,%llu,%.9g,%.9g\n", rate, static_cast<unsigned long long>(seed),
                          report.roc_auc, report.prc_auc);
            table << buf;
            std::printf("rate=%g seed=%llu roc_auc=%.4f prc_auc=%.4f\n", rate,
                        static_cast<unsigned long long>(seed), report.roc_auc, report.prc_auc);
            std::fflush(stdout);
        }
        auto mean_std = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
            return std::pair<double, double>(m, s);
        };
        auto [rm, rs] = mean_std(rocs);
        auto [pm, ps] = mean_std(prcs);
        roc_means.push_back(rm);
        prc_means.push_back(pm);
        std::snprintf(buf, sizeof(buf), "%g,%.9g,%.9g,%.9g,%.9g\n", rate, rm, rs, pm, ps);
        summary << buf;
    }

    if (!plot_path.empty()) write_sweep_svg(plot_path, rates, roc_means, prc_means);
    std::cout << "wrote " << dir << "/sweep.csv and " << dir << "/summary.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GST-style spatiotemporal forecasting and anomaly scoring toolkit"};
    app.require_subcommand(1);
    app.footer(run_config_help());

    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    int channels = 5, train_len = 3000, test_len = 2000, segments = 4;
    uint64_t synth_seed = 1;
    std::string synth_out;
    synth->add_option("--channels", channels, "number of channels")->capture_default_str();
    synth->add_option("--train-len", train_len, "training rows")->capture_default_str();
    synth->add_option("--test-len", test_len, "test rows")->capture_default_str();
    synth->add_option("--segments", segments, "anomalous segments in the test split")->capture_default_str();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* mask = app.add_subcommand("mask", "Drop observations at a fixed missing rate");
    std::string mask_in, mask_out_series, mask_out_mask;
    double mask_rate = 0.1;
    uint64_t mask_seed = 1;
    mask->add_option("--in", mask_in, "input series CSV")->required();
    mask->add_option("--rate", mask_rate, "missing rate in [0,1]")->capture_default_str();
    mask->add_option("--seed", mask_seed, "mask seed")->capture_default_str();
    mask->add_option("--out", mask_out_series, "masked series CSV")->required();
    mask->add_option("--mask-out", mask_out_mask, "mask CSV (default: <out>.mask.csv)");

    auto* train_cmd = app.add_subcommand("train", "Train the forecaster on a series");
    std::string train_cfg, train_in, train_out, train_history;
    train_cmd->add_option("--config", train_cfg, "key=value config file");
    train_cmd->add_option("--train", train_in, "training series CSV");
    train_cmd->add_option("--out", train_out, "model checkpoint path");
    train_cmd->add_option("--history", train_history, "training history CSV (default: <out>.history.csv)");

    auto* score = app.add_subcommand("score", "Stream anomaly scores for a test series");
    std::string score_model, score_train, score_test, score_out, score_alphas, score_scorer = "gaussian";
    bool score_parallel = true;
    score->add_option("--model", score_model, "model checkpoint")->required();
    score->add_option("--train", score_train, "training series CSV (seeds the scorer)")->required();
    score->add_option("--test", score_test, "test series CSV")->required();
    score->add_option("--out", score_out, "scores CSV")->required();
    score->add_option("--alphas", score_alphas, "optional per-channel likelihood CSV");
    score->add_option("--scorer", score_scorer, "gaussian | recon_pca | dist_kmeans")->capture_default_str();
    score->add_option("--parallel", score_parallel, "use OpenMP for forecasting")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "Threshold-free evaluation of scores against labels");
    std::string eval_scores, eval_labels, eval_out;
    eval->add_option("--scores", eval_scores, "scores CSV")->required();
    eval->add_option("--labels", eval_labels, "labels CSV")->required();
    eval->add_option("--out", eval_out, "report path")->required();

    auto* sweep = app.add_subcommand("sweep", "Missing-rate robustness sweep: mask, train, score, eval");
    std::string sweep_cfg, sweep_train, sweep_test, sweep_labels, sweep_out, sweep_plot;
    std::string sweep_rates = "0,0.1,0.3,0.5,0.7,0.9", sweep_seeds = "1..5";
    sweep->add_option("--config", sweep_cfg, "key=value config file");
    sweep->add_option("--train", sweep_train, "training series CSV");
    sweep->add_option("--test", sweep_test, "test series CSV");
    sweep->add_option("--labels", sweep_labels, "labels CSV");
    sweep->add_option("--rates", sweep_rates, "comma-separated missing rates")->capture_default_str();
    sweep->add_option("--seeds", sweep_seeds, "seed list: lo..hi or comma-separated")->capture_default_str();
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_option("--plot", sweep_plot, "optional SVG chart of AUC vs missing rate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(channels, train_len, test_len, segments, synth_seed, synth_out);
        if (mask->parsed()) return cmd_mask(mask_in, mask_rate, mask_seed, mask_out_series, mask_out_mask);
        if (train_cmd->parsed()) return cmd_train(train_cfg, train_in, train_out, train_history);
        if (score->parsed())
            return cmd_score(score_model, score_train, score_test, score_out, score_alphas, score_scorer,
                             score_parallel);
        if (eval->parsed()) return cmd_eval(eval_scores, eval_labels, eval_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_cfg, sweep_train, sweep_test, sweep_labels, sweep_rates, sweep_seeds, sweep_out,
                             sweep_plot);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
