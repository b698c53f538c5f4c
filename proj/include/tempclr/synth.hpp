#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempclr/matrix.hpp"
#include "tempclr/negatives.hpp"
#include "tempclr/seqcore.hpp"

namespace tempclr {

// Video-paragraph corpus with step prototypes shared inside a task. Clips
// that look like another step (confusers) can only be placed by order.
struct SynthConfig {
    std::size_t n_tasks = 10;
    std::size_t videos_per_task = 25;
    std::size_t segments_per_video = 5;  // K steps per task
    std::size_t clips_min = 3;
    std::size_t clips_max = 5;
    std::size_t dim = 32;
    std::size_t content_dim = 0;  // 0 = dim; the rest of the space holds nuisance
    double caption_noise = 0.1;
    double clip_noise = 0.1;
    double confuser_prob = 0.0;
    std::size_t background_min = 0;
    std::size_t background_max = 0;
    double progress_drift = 0.0;
    double task_share = 0.0;      // weight of the task-wide direction in each step prototype
    double style_scale = 0.0;     // per-video constant offset on every clip (nuisance subspace)
    double nuisance_scale = 0.0;  // per-unit noise restricted to the nuisance subspace
    bool shuffle_steps = true;    // each video performs the task steps in its own order
    double train_fraction = 0.8;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t effective_content_dim() const { return content_dim == 0 ? dim : content_dim; }

    void validate() const {
        if (n_tasks < 1 || videos_per_task < 1 || segments_per_video < 1 || clips_min < 1 || dim < 1) {
            throw std::invalid_argument("SynthConfig: counts must be >= 1");
        }
        if (clips_max < clips_min || background_max < background_min) {
            throw std::invalid_argument("SynthConfig: max < min in a range");
        }
        if (!(confuser_prob >= 0.0 && confuser_prob < 1.0)) {
            throw std::invalid_argument("SynthConfig: confuser_prob must lie in [0, 1)");
        }
        if (caption_noise < 0.0 || clip_noise < 0.0 || style_scale < 0.0 || nuisance_scale < 0.0) {
            throw std::invalid_argument("SynthConfig: noise scales must be >= 0");
        }
        if (!(task_share >= 0.0 && task_share < 1.0)) throw std::invalid_argument("SynthConfig: task_share in [0, 1)");
        if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
            throw std::invalid_argument("SynthConfig: train_fraction in (0, 1]");
        }
        if (effective_content_dim() > dim) throw std::invalid_argument("SynthConfig: content_dim > dim");
        const std::size_t needed = segments_per_video + (task_share > 0.0 ? 1 : 0);
        if (effective_content_dim() < needed) {
            throw DataError("SynthConfig: dim " + std::to_string(effective_content_dim()) + " < K=" +
                            std::to_string(needed) + " (prototype orthogonalization infeasible)");
        }
    }
};

struct ClipTruth {
    int segment = -1;      // -1 = background
    int source_step = -1;  // task step the clip was generated from (-1 = background)
    bool confuser = false;
};

struct PairTruth {
    std::string id;
    std::size_t task = 0;
    std::vector<std::size_t> step_order;  // task step shown by segment k
    std::vector<ClipTruth> clips;
    bool train = true;
};

struct SynthCorpus {
    std::vector<SegmentedPair> train;
    std::vector<SegmentedPair> test;
    std::vector<PairTruth> truth;  // generation order, train and test mixed
};

namespace detail {

// Orthonormal columns (Gram-Schmidt with re-orthogonalization) of a seeded
// Gaussian matrix, i.e. the Q factor of its QR decomposition.
inline Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix q(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<double> v(rows);
        for (double& x : v) x = normal(rng);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < c; ++p) {
                double d = 0.0;
                for (std::size_t r = 0; r < rows; ++r) d += v[r] * q(r, p);
                for (std::size_t r = 0; r < rows; ++r) v[r] -= d * q(r, p);
            }
        }
        const double n = norm(v);
        for (std::size_t r = 0; r < rows; ++r) q(r, c) = v[r] / n;
    }
    return q;
}

// Splits a random rotation of R^dim into a content and a nuisance subspace.
struct Subspaces {
    Matrix content;   // dim x content_dim
    Matrix nuisance;  // dim x (dim - content_dim)
};

inline Subspaces make_subspaces(std::size_t dim, std::size_t content_dim, Rng& rng) {
    const Matrix basis = random_orthonormal(dim, dim, rng);
    Subspaces s{Matrix(dim, content_dim), Matrix(dim, dim - content_dim)};
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            if (c < content_dim) s.content(r, c) = basis(r, c);
            else s.nuisance(r, c - content_dim) = basis(r, c);
        }
    }
    return s;
}

// basis * coeffs, coefficients i.i.d. Gaussian with expected squared norm scale^2.
inline std::vector<double> subspace_noise(const Matrix& basis, double scale, Rng& rng) {
    std::vector<double> out(basis.rows(), 0.0);
    if (scale == 0.0 || basis.cols() == 0) return out;
    std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(basis.cols())));
    for (std::size_t c = 0; c < basis.cols(); ++c) {
        const double a = normal(rng);
        for (std::size_t r = 0; r < basis.rows(); ++r) out[r] += a * basis(r, c);
    }
    return out;
}

inline std::vector<double> isotropic_noise(std::size_t dim, double scale, Rng& rng) {
    std::vector<double> out(dim, 0.0);
    if (scale == 0.0) return out;
    std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(dim)));
    for (double& x : out) x = normal(rng);
    return out;
}

inline std::vector<double> unit_in(const Matrix& basis, Rng& rng) {
    auto v = subspace_noise(basis, 1.0, rng);
    const double n = norm(v);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
    return v;
}

// K unit prototypes sqrt(share) * center + sqrt(1 - share) * v_k with
// {center, v_1..v_K} orthonormal inside the content subspace.
inline std::vector<std::vector<double>> make_prototypes(const Matrix& content, std::size_t k, double share, Rng& rng) {
    const std::size_t extra = share > 0.0 ? 1 : 0;
    const Matrix coeffs = random_orthonormal(content.cols(), k + extra, rng);
    auto column = [&](std::size_t c) {
        std::vector<double> v(content.rows(), 0.0);
        for (std::size_t r = 0; r < content.rows(); ++r) {
            for (std::size_t b = 0; b < content.cols(); ++b) v[r] += content(r, b) * coeffs(b, c);
        }
        return v;
    };
    std::vector<double> center = extra ? column(k) : std::vector<double>(content.rows(), 0.0);
    std::vector<std::vector<double>> protos;
    for (std::size_t s = 0; s < k; ++s) {
        auto v = column(s);
        for (std::size_t r = 0; r < v.size(); ++r) v[r] = std::sqrt(share) * center[r] + std::sqrt(1.0 - share) * v[r];
        protos.push_back(std::move(v));
    }
    return protos;
}

inline void add_to(std::vector<double>& a, const std::vector<double>& b, double scale = 1.0) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += scale * b[k];
}

inline std::string padded(const std::string& prefix, std::size_t n, int width = 4) {
    std::string s = std::to_string(n);
    return prefix + std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

}  // namespace detail

inline SynthCorpus gen_corpus(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t d = cfg.dim, K = cfg.segments_per_video;
    const auto spaces = detail::make_subspaces(d, cfg.effective_content_dim(), rng);
    const Matrix& nuisance_basis = spaces.nuisance.cols() > 0 ? spaces.nuisance : spaces.content;
    const auto drift_dir = detail::unit_in(spaces.content, rng);

    std::vector<std::vector<std::vector<double>>> task_protos;
    for (std::size_t t = 0; t < cfg.n_tasks; ++t) {
        task_protos.push_back(detail::make_prototypes(spaces.content, K, cfg.task_share, rng));
    }
    std::vector<std::vector<double>> background_pool;
    for (int b = 0; b < 8; ++b) background_pool.push_back(detail::unit_in(nuisance_basis, rng));

    const std::size_t n_videos = cfg.n_tasks * cfg.videos_per_task;
    std::vector<std::size_t> video_order(n_videos);
    std::iota(video_order.begin(), video_order.end(), std::size_t{0});
    std::shuffle(video_order.begin(), video_order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n_videos)));
    std::vector<bool> is_train(n_videos, false);
    for (std::size_t k = 0; k < n_train && k < n_videos; ++k) is_train[video_order[k]] = true;

    std::size_t n_orders = 1;
    for (std::size_t k = 2; k <= K && n_orders < cfg.videos_per_task; ++k) n_orders *= k;
    const bool distinct_orders = n_orders >= cfg.videos_per_task;
    std::vector<std::set<std::vector<std::size_t>>> used_orders(cfg.n_tasks);

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    SynthCorpus out;
    for (std::size_t v = 0; v < n_videos; ++v) {
        const std::size_t task = v / cfg.videos_per_task;
        const auto& protos = task_protos[task];
        PairTruth truth;
        truth.id = detail::padded("video", v);
        truth.task = task;
        truth.train = is_train[v];
        truth.step_order.resize(K);
        std::iota(truth.step_order.begin(), truth.step_order.end(), std::size_t{0});
        if (cfg.shuffle_steps) {
            // distinct orders inside a task whenever there are enough of them
            auto& used = used_orders[task];
            do {
                std::shuffle(truth.step_order.begin(), truth.step_order.end(), rng);
            } while (distinct_orders && used.count(truth.step_order));
            used.insert(truth.step_order);
        }

        std::uniform_int_distribution<std::size_t> seg_len(cfg.clips_min, cfg.clips_max);
        std::uniform_int_distribution<std::size_t> bg_count(cfg.background_min, cfg.background_max);
        std::uniform_int_distribution<std::size_t> gap_pick(0, K);
        std::uniform_int_distribution<std::size_t> bg_pick(0, background_pool.size() - 1);
        std::vector<std::size_t> lengths(K);
        for (auto& l : lengths) l = seg_len(rng);
        std::vector<std::size_t> gaps(K + 1, 0);  // background clips before segment k (k = K: trailing)
        for (std::size_t b = bg_count(rng); b > 0; --b) ++gaps[gap_pick(rng)];
        const auto style = detail::unit_in(nuisance_basis, rng);

        Matrix captions(K, d);
        for (std::size_t k = 0; k < K; ++k) {
            auto c = protos[truth.step_order[k]];
            detail::add_to(c, detail::isotropic_noise(d, cfg.caption_noise, rng));
            detail::add_to(c, detail::subspace_noise(nuisance_basis, cfg.nuisance_scale, rng));
            std::copy(c.begin(), c.end(), captions.row(k).begin());
        }

        Matrix clips;
        SegmentMap segments;
        auto noisy_clip = [&](std::vector<double> base) {
            detail::add_to(base, detail::isotropic_noise(d, cfg.clip_noise, rng));
            detail::add_to(base, detail::subspace_noise(nuisance_basis, cfg.nuisance_scale, rng));
            detail::add_to(base, style, cfg.style_scale);
            clips.append_row(base);
        };
        auto background_clip = [&] {
            noisy_clip(background_pool[bg_pick(rng)]);
            truth.clips.push_back({-1, -1, false});
        };
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t b = 0; b < gaps[k]; ++b) background_clip();
            const std::size_t start = clips.rows();
            const std::size_t step = truth.step_order[k];
            for (std::size_t j = 0; j < lengths[k]; ++j) {
                std::size_t source = step;
                bool confuser = false;
                if (K > 1 && uniform(rng) < cfg.confuser_prob) {
                    std::uniform_int_distribution<std::size_t> other(0, K - 2);
                    source = other(rng);
                    if (source >= step) ++source;
                    confuser = true;
                }
                auto base = protos[source];
                const double progress = (static_cast<double>(j) + 0.5) / static_cast<double>(lengths[k]) - 0.5;
                detail::add_to(base, drift_dir, cfg.progress_drift * progress);
                noisy_clip(std::move(base));
                truth.clips.push_back({static_cast<int>(k), static_cast<int>(source), confuser});
            }
            segments.push_back({k, start, clips.rows()});
        }
        for (std::size_t b = 0; b < gaps[K]; ++b) background_clip();

        SegmentedPair pair;
        pair.id = truth.id;
        pair.anchor = {truth.id + ":text", std::move(captions)};
        pair.positive = {truth.id + ":video", std::move(clips)};
        pair.segments = std::move(segments);
        pair.background_mask = compute_background_mask(pair.positive.size(), pair.segments);
        (truth.train ? out.train : out.test).push_back(std::move(pair));
        out.truth.push_back(std::move(truth));
    }
    return out;
}

// Segment map recomputed from per-clip ground truth.
inline SegmentMap segments_from_truth(const PairTruth& truth) {
    SegmentMap out;
    for (std::size_t j = 0; j < truth.clips.size(); ++j) {
        const int s = truth.clips[j].segment;
        if (s < 0) continue;
        if (out.empty() || out.back().caption_index != static_cast<std::size_t>(s)) {
            out.push_back({static_cast<std::size_t>(s), j, j + 1});
        } else {
            out.back().end = j + 1;
        }
    }
    return out;
}

// Frame-sequence corpus where every class shows the same prototypes in a
// class-specific order, so only temporal order separates classes.
struct FewShotSynthConfig {
    std::size_t n_classes = 20;
    std::size_t base_classes = 10;  // first classes go to the base (training) split
    std::size_t videos_per_class = 20;
    std::size_t n_prototypes = 4;
    std::size_t frames_min = 3;  // frames per prototype
    std::size_t frames_max = 5;
    std::size_t dim = 32;
    std::size_t content_dim = 0;
    double frame_noise = 0.1;
    double progress_drift = 0.0;
    double task_share = 0.0;
    double style_scale = 0.0;
    double nuisance_scale = 0.0;
    std::vector<std::vector<std::size_t>> class_orders;  // optional explicit orders
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t effective_content_dim() const { return content_dim == 0 ? dim : content_dim; }
};

struct FewShotCorpus {
    std::vector<LabeledVideo> base;
    std::vector<LabeledVideo> novel;
    std::vector<std::vector<std::size_t>> class_orders;
};

inline FewShotCorpus gen_fewshot_corpus(const FewShotSynthConfig& cfg) {
    if (cfg.n_classes < 1 || cfg.videos_per_class < 1 || cfg.n_prototypes < 1 || cfg.frames_min < 1 || cfg.dim < 1) {
        throw std::invalid_argument("FewShotSynthConfig: counts must be >= 1");
    }
    if (cfg.frames_max < cfg.frames_min) throw std::invalid_argument("FewShotSynthConfig: frames_max < frames_min");
    if (cfg.base_classes > cfg.n_classes) throw std::invalid_argument("FewShotSynthConfig: base_classes > n_classes");
    if (!(cfg.task_share >= 0.0 && cfg.task_share < 1.0)) {
        throw std::invalid_argument("FewShotSynthConfig: task_share in [0, 1)");
    }
    const std::size_t needed = cfg.n_prototypes + (cfg.task_share > 0.0 ? 1 : 0);
    if (cfg.effective_content_dim() > cfg.dim) throw std::invalid_argument("FewShotSynthConfig: content_dim > dim");
    if (cfg.effective_content_dim() < needed) {
        throw DataError("FewShotSynthConfig: dim < number of prototypes (orthogonalization infeasible)");
    }

    Rng rng(cfg.seed);
    const std::size_t d = cfg.dim, K = cfg.n_prototypes;
    const auto spaces = detail::make_subspaces(d, cfg.effective_content_dim(), rng);
    const Matrix& nuisance_basis = spaces.nuisance.cols() > 0 ? spaces.nuisance : spaces.content;
    const auto drift_dir = detail::unit_in(spaces.content, rng);
    const auto protos = detail::make_prototypes(spaces.content, K, cfg.task_share, rng);

    FewShotCorpus out;
    if (!cfg.class_orders.empty()) {
        if (cfg.class_orders.size() != cfg.n_classes) {
            throw std::invalid_argument("FewShotSynthConfig: class_orders size != n_classes");
        }
        for (const auto& o : cfg.class_orders) {
            for (std::size_t p : o) {
                if (p >= K) throw std::invalid_argument("FewShotSynthConfig: class order references a missing prototype");
            }
        }
        out.class_orders = cfg.class_orders;
    } else {
        std::set<std::vector<std::size_t>> seen;
        std::size_t attempts = 0;
        while (out.class_orders.size() < cfg.n_classes) {
            std::vector<std::size_t> o(K);
            std::iota(o.begin(), o.end(), std::size_t{0});
            std::shuffle(o.begin(), o.end(), rng);
            if (seen.insert(o).second) out.class_orders.push_back(std::move(o));
            if (++attempts > 100000) throw DataError("FewShotSynthConfig: not enough distinct prototype orders");
        }
    }

    std::uniform_int_distribution<std::size_t> frames_per(cfg.frames_min, cfg.frames_max);
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        for (std::size_t v = 0; v < cfg.videos_per_class; ++v) {
            const auto style = detail::unit_in(nuisance_basis, rng);
            Matrix frames;
            for (std::size_t p : out.class_orders[c]) {
                const std::size_t n = frames_per(rng);
                for (std::size_t f = 0; f < n; ++f) {
                    auto x = protos[p];
                    const double progress = (static_cast<double>(f) + 0.5) / static_cast<double>(n) - 0.5;
                    detail::add_to(x, drift_dir, cfg.progress_drift * progress);
                    detail::add_to(x, detail::isotropic_noise(d, cfg.frame_noise, rng));
                    detail::add_to(x, detail::subspace_noise(nuisance_basis, cfg.nuisance_scale, rng));
                    detail::add_to(x, style, cfg.style_scale);
                    frames.append_row(x);
                }
            }
            LabeledVideo lv;
            lv.label = detail::padded("class", c, 2);
            lv.id = lv.label + "_" + detail::padded("v", v, 3);
            lv.frames = {lv.id, std::move(frames)};
            (c < cfg.base_classes ? out.base : out.novel).push_back(std::move(lv));
        }
    }
    return out;
}

}  // namespace tempclr
