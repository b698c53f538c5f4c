// tempclr: align, train, evaluate and synthesize on embedding-sequence datasets.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tempclr/io.hpp"
#include "tempclr/tempclr.hpp"

namespace fs = std::filesystem;
using namespace tempclr;

namespace {

enum Exit { ok = 0, usage = 2, data = 3, numerical = 4 };

// Raised for flag combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string resolve_data(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (auto env = io::default_data_dir()) return *env;
    throw UsageError("--data is required (or set TEMPCLR_DATA)");
}

ProjectionModel model_or_identity(const std::string& ckpt, std::size_t dim) {
    if (ckpt.empty()) return ProjectionModel::identity(dim);
    auto m = io::load_checkpoint(ckpt);
    if (m.input_dim() != dim) {
        throw DataError("checkpoint input dim " + std::to_string(m.input_dim()) + " != dataset dim " +
                        std::to_string(dim));
    }
    return m;
}

std::vector<std::string> split_filter(const std::string& split) {
    if (split == "all") return {};
    return {split};
}

// ---- align -----------------------------------------------------------------

struct AlignArgs {
    std::string pair, cost, measure = "dtw";
    bool normalize = true, emit_path = false;
};

int run_align(const AlignArgs& a) {
    if (a.pair.empty() == a.cost.empty()) throw UsageError("align: give exactly one of --pair or --cost");
    const Measure m = parse_measure(a.measure);
    AlignmentResult res;
    if (!a.pair.empty()) {
        const auto p = io::load_pair(a.pair);
        const auto sim = similarity_matrix(p.anchor.select(p.segment_captions()), p.positive);
        res = align_similarity(sim, m, a.normalize);
    } else {
        const auto j = io::detail::parse_json(io::read_file(a.cost), a.cost);
        if (!j.is_array() || j.empty()) throw DataError(a.cost + ": cost must be a non-empty array of rows");
        Matrix cost;
        for (std::size_t r = 0; r < j.size(); ++r) {
            if (!j[r].is_array()) throw DataError(a.cost + ": row " + std::to_string(r) + " is not an array");
            std::vector<double> row;
            for (const auto& x : j[r]) {
                if (!x.is_number()) throw DataError(a.cost + ": row " + std::to_string(r) + " holds a non-number");
                row.push_back(x.get<double>());
            }
            if (r > 0 && row.size() != cost.cols()) throw DataError(a.cost + ": ragged row " + std::to_string(r));
            cost.append_row(row);
        }
        res = align(cost, m);
        Matrix sim(cost.rows(), cost.cols());
        for (std::size_t i = 0; i < cost.rows(); ++i) {
            for (std::size_t k = 0; k < cost.cols(); ++k) sim(i, k) = 1.0 - cost(i, k);
        }
        res.score = path_score(sim, res.path, a.normalize);
    }
    std::cout << "{\"measure\": \"" << to_string(m) << "\", \"score\": " << io::format_float(res.score)
              << ", \"distance\": " << io::format_float(res.distance) << ", \"path_length\": " << res.path.size();
    if (a.emit_path) {
        std::cout << ", \"path\": [";
        for (std::size_t k = 0; k < res.path.size(); ++k) {
            std::cout << (k ? ", " : "") << "[" << res.path[k].i << ", " << res.path[k].j << "]";
        }
        std::cout << "]";
    }
    std::cout << "}\n";
    return ok;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data, mode = "video-text", strategy = "seg-unit", measure = "dtw", out, report, split = "train";
    std::string schedule = "constant", activation = "identity";
    std::size_t negatives = 32, batch = 8, hidden = 0, output_dim = 0;
    double tau = 1.0, w_unit = 0.3, w_seq = 0.7, lr = 1e-3;
    int epochs = 10;
    std::uint64_t seed = 0;
    bool twin = false, raw_score = false;
};

int run_train(const TrainArgs& a) {
    TrainConfig cfg;
    cfg.mode = parse_train_mode(a.mode);
    cfg.neg_strategy = parse_strategy(a.strategy);
    cfg.neg_count = a.negatives;
    cfg.loss.tau = a.tau;
    cfg.loss.w_unit = a.w_unit;
    cfg.loss.w_seq = a.w_seq;
    cfg.loss.measure = parse_measure(a.measure);
    cfg.loss.normalize_score = !a.raw_score;
    cfg.lr = a.lr;
    cfg.epochs = a.epochs;
    cfg.batch_pairs = a.batch;
    cfg.seed = a.seed;
    if (a.schedule == "cosine") cfg.schedule = Schedule::cosine;
    else if (a.schedule != "constant") throw UsageError("unknown schedule '" + a.schedule + "'");
    cfg.validate();

    const auto ds = io::load_dataset(resolve_data(a.data), split_filter(a.split));
    const std::size_t dim = ds.manifest.dim;
    ModelSpec spec{dim, a.hidden, a.output_dim == 0 ? dim : a.output_dim, parse_activation(a.activation), a.twin, a.seed};
    ProjectionModel model(spec);

    TrainReport rep;
    if (cfg.mode == TrainMode::video_only) {
        if (ds.manifest.kind != io::DatasetKind::videos) throw UsageError("--mode video-only needs a videos dataset");
        if (ds.videos.empty()) throw DataError("no videos in split '" + a.split + "'");
        rep = fit_video_only(ds.videos, std::move(model), cfg);
    } else {
        if (ds.manifest.kind != io::DatasetKind::pairs) throw UsageError("--mode video-text needs a pairs dataset");
        if (ds.pairs.empty()) throw DataError("no pairs in split '" + a.split + "'");
        rep = fit(ds.pairs, std::move(model), cfg);
    }
    io::save_checkpoint(rep.model, a.out);
    const std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
    io::write_file(report_path, io::train_report_json(rep, cfg).dump(2) + "\n");
    std::printf("epochs %d  initial loss %.6f  final loss %.6f  skipped pairs %zu\n", cfg.epochs, rep.loss_curve.front(),
                rep.loss_curve.back(), rep.skipped_pairs);
    std::printf("checkpoint %s\nreport %s\n", a.out.c_str(), report_path.c_str());
    return ok;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string data, model, split, csv, dump, measure = "dtw", background, classifier = "alignment";
    std::vector<int> ks{1, 5, 10};
    std::size_t way = 5, shot = 1, queries = 15, episodes = 1000;
    std::uint64_t seed = 0;
};

int finish_eval(const EvalArgs& a, const std::vector<EvalReport>& reports) {
    if (!a.csv.empty()) io::write_file(a.csv, io::report_csv(reports));
    if (!a.dump.empty()) {
        std::string lines;
        for (const auto& r : reports) lines += io::per_query_jsonl(r);
        io::write_file(a.dump, lines);
    }
    std::cout << io::report_table(reports);
    return ok;
}

io::Dataset load_pairs_for_eval(const EvalArgs& a) {
    auto ds = io::load_dataset(resolve_data(a.data), split_filter(a.split.empty() ? "test" : a.split));
    if (ds.manifest.kind != io::DatasetKind::pairs) throw UsageError("this evaluation needs a pairs dataset");
    if (ds.pairs.empty()) throw DataError("no pairs in the selected split");
    return ds;
}

int run_eval(const std::string& task, const EvalArgs& a) {
    if (!a.background.empty() && task != "retrieval-full") throw UsageError("--background only applies to retrieval-full");
    if (task == "fewshot") {
        auto ds = io::load_dataset(resolve_data(a.data), split_filter(a.split.empty() ? "novel" : a.split));
        if (ds.manifest.kind != io::DatasetKind::videos) throw UsageError("fewshot needs a videos dataset");
        const auto model = model_or_identity(a.model, ds.manifest.dim);
        FewShotConfig cfg;
        cfg.way = a.way;
        cfg.shot = a.shot;
        cfg.queries_per_class = a.queries;
        cfg.episodes = a.episodes;
        cfg.measure = parse_measure(a.measure);
        cfg.seed = a.seed;
        if (a.classifier == "mean-vector") cfg.classifier = FewShotClassifier::mean_vector;
        else if (a.classifier != "alignment") throw UsageError("unknown classifier '" + a.classifier + "'");
        return finish_eval(a, {fewshot_eval(model, ds.videos, cfg)});
    }
    const auto ds = load_pairs_for_eval(a);
    const auto model = model_or_identity(a.model, ds.manifest.dim);
    if (task == "retrieval-full") {
        const auto bg = parse_background(a.background.empty() ? "remove" : a.background);
        return finish_eval(a, {retrieval_full(ds.pairs, model, parse_retrieval_measure(a.measure), bg, a.ks, !a.dump.empty())});
    }
    if (task == "retrieval-clip") return finish_eval(a, {retrieval_clip(ds.pairs, model, a.ks)});
    if (task == "localize") {
        EvalReport r;
        r.task = "localize";
        r.measure = "argmax";
        r.auxiliary["recall"] = mean_localization_recall(ds.pairs, model);
        return finish_eval(a, {r});
    }
    if (task == "pair-match") {
        EvalReport r;
        const Measure m = parse_measure(a.measure);
        r.task = "pair-match";
        r.measure = std::string(to_string(m));
        r.auxiliary["pair_match"] = mean_pair_match(ds.pairs, model, m);
        return finish_eval(a, {r});
    }
    throw UsageError("unknown eval task '" + task + "'");
}

// ---- synth -----------------------------------------------------------------

int run_synth(const std::string& config, const std::string& out, bool binary) {
    const auto j = io::detail::parse_json(io::read_file(config), config);
    const std::string kind = j.value("kind", std::string("pairs"));
    const std::string ext = binary ? std::string(io::binary_extension) : ".json";
    const fs::path dir(out);
    io::ensure_dir(dir);
    if (kind == "pairs") {
        const auto cfg = io::synth_config_from_json(j);
        const auto corpus = gen_corpus(cfg);
        std::vector<std::pair<const SegmentedPair*, std::string>> items;
        for (const auto& p : corpus.train) items.emplace_back(&p, "train");
        for (const auto& p : corpus.test) items.emplace_back(&p, "test");
        io::save_pairs(dir, items, ext);
        io::write_file(dir / "truth.json", io::truth_to_json(corpus.truth).dump(1) + "\n");
        std::size_t confusers = 0, clips = 0;
        for (const auto& t : corpus.truth) {
            for (const auto& c : t.clips) {
                if (c.segment >= 0) {
                    ++clips;
                    confusers += c.confuser ? 1 : 0;
                }
            }
        }
        std::printf("pairs: %zu train, %zu test, dim %zu, confuser rate %.4f\n", corpus.train.size(), corpus.test.size(),
                    cfg.dim, clips ? static_cast<double>(confusers) / static_cast<double>(clips) : 0.0);
    } else if (kind == "fewshot") {
        const auto cfg = io::fewshot_config_from_json(j);
        const auto corpus = gen_fewshot_corpus(cfg);
        std::vector<std::pair<const LabeledVideo*, std::string>> items;
        for (const auto& v : corpus.base) items.emplace_back(&v, "base");
        for (const auto& v : corpus.novel) items.emplace_back(&v, "novel");
        io::save_videos(dir, items, ext);
        std::printf("videos: %zu base, %zu novel, %zu classes, dim %zu\n", corpus.base.size(), corpus.novel.size(),
                    cfg.n_classes, cfg.dim);
    } else {
        throw DataError(config + ": field 'kind' must be 'pairs' or 'fewshot'");
    }
    std::printf("wrote %s\n", (dir / io::manifest_name).string().c_str());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequence-level temporal contrastive learning on embedding sequences"};
    app.require_subcommand(1);

    AlignArgs al;
    auto* align_cmd = app.add_subcommand("align", "align a pair (captions vs clips) or a cost matrix");
    align_cmd->add_option("--pair", al.pair, "pair file (.json or .tcpb)");
    align_cmd->add_option("--cost", al.cost, "JSON cost matrix (array of rows)");
    align_cmd->add_option("--measure", al.measure, "dtw | otam")->capture_default_str();
    align_cmd->add_flag("--normalize,!--no-normalize", al.normalize, "mean similarity along the path")->capture_default_str();
    align_cmd->add_flag("--emit-path", al.emit_path, "print the warping path");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train the projection head");
    train_cmd->add_option("--data", tr.data, "dataset directory (default: $TEMPCLR_DATA)");
    train_cmd->add_option("--split", tr.split, "manifest split to train on, or 'all'")->capture_default_str();
    train_cmd->add_option("--mode", tr.mode, "video-text | video-only")->capture_default_str();
    train_cmd->add_option("--strategy", tr.strategy, "negative strategy")->capture_default_str();
    train_cmd->add_option("--negatives", tr.negatives, "negatives per pair")->capture_default_str();
    train_cmd->add_option("--tau", tr.tau, "temperature")->capture_default_str();
    train_cmd->add_option("--w-unit", tr.w_unit, "unit-level loss weight")->capture_default_str();
    train_cmd->add_option("--w-seq", tr.w_seq, "sequence-level loss weight")->capture_default_str();
    train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--epochs", tr.epochs, "epochs")->capture_default_str();
    train_cmd->add_option("--batch", tr.batch, "pairs per step")->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "RNG seed")->capture_default_str();
    train_cmd->add_option("--measure", tr.measure, "alignment used in the loss: dtw | otam")->capture_default_str();
    train_cmd->add_option("--hidden", tr.hidden, "hidden width (0 = single affine layer)")->capture_default_str();
    train_cmd->add_option("--output-dim", tr.output_dim, "projection width (0 = input dim)")->capture_default_str();
    train_cmd->add_option("--activation", tr.activation, "identity | relu")->capture_default_str();
    train_cmd->add_option("--schedule", tr.schedule, "constant | cosine")->capture_default_str();
    train_cmd->add_flag("--twin", tr.twin, "separate head per modality");
    train_cmd->add_flag("--raw-score", tr.raw_score, "sum similarities along the path instead of averaging");
    train_cmd->add_option("--out", tr.out, "checkpoint path")->required();
    train_cmd->add_option("--report", tr.report, "JSON report path (default: <out>.report.json)");

    EvalArgs ev;
    std::string eval_task;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint (identity model when --model is absent)");
    eval_cmd->add_option("task", eval_task, "retrieval-full | retrieval-clip | localize | pair-match | fewshot")
        ->required()
        ->check(CLI::IsMember({"retrieval-full", "retrieval-clip", "localize", "pair-match", "fewshot"}));
    eval_cmd->add_option("--data", ev.data, "dataset directory (default: $TEMPCLR_DATA)");
    eval_cmd->add_option("--model", ev.model, "checkpoint");
    eval_cmd->add_option("--split", ev.split, "manifest split (default test / novel), or 'all'");
    eval_cmd->add_option("--measure", ev.measure, "dtw | otam | capavg | dtw+capavg | otam+capavg")->capture_default_str();
    eval_cmd->add_option("--background", ev.background, "keep | remove (retrieval-full only)");
    eval_cmd->add_option("--k", ev.ks, "recall cut-offs")->delimiter(',')->capture_default_str();
    eval_cmd->add_option("--way", ev.way)->capture_default_str();
    eval_cmd->add_option("--shot", ev.shot)->capture_default_str();
    eval_cmd->add_option("--queries", ev.queries, "queries per class")->capture_default_str();
    eval_cmd->add_option("--episodes", ev.episodes)->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed)->capture_default_str();
    eval_cmd->add_option("--classifier", ev.classifier, "alignment | mean-vector")->capture_default_str();
    eval_cmd->add_option("--csv", ev.csv, "write the CSV report here");
    eval_cmd->add_option("--dump", ev.dump, "write per-query scores as JSON lines");

    std::string synth_config, synth_out;
    bool synth_binary = false;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--config", synth_config, "JSON config")->required();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_flag("--binary", synth_binary, "packed float32 item files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*align_cmd) return run_align(al);
        if (*train_cmd) return run_train(tr);
        if (*eval_cmd) return run_eval(eval_task, ev);
        if (*synth_cmd) return run_synth(synth_config, synth_out, synth_binary);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return usage;
}
