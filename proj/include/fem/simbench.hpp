#pragma once

// Desk-scale stand-in for a face-recognition ecosystem: synthetic identity
// worlds, seeded nonlinear extractors, FAR-calibrated verifiers, and ASR
// evaluation of attack probes.
//
// Geometry: an identity is a gaussian latent; extractors are seeded tanh
// networks mapping latents onto the unit sphere in R^D. The attack
// artifact under evaluation is an embedding in the default extractor's
// space (standing in for a generated face image); each verifier re-encodes
// artifacts with its own seeded network and applies its own threshold,
// calibrated to a fixed false-acceptance rate on impostor identity pairs.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "fem/kan.hpp"
#include "fem/mlp.hpp"
#include "fem/numkit.hpp"
#include "fem/protect.hpp"
#include "fem/train.hpp"

namespace fem {

struct IdentityWorld {
    std::size_t latent_dim = 64;
    double intra_noise_sigma = 0.1;
    std::uint64_t seed = 0;
    Mat64 latents; // num_identities x latent_dim

    static IdentityWorld synth(std::size_t num_identities, std::size_t latent_dim,
                               double sigma, std::uint64_t seed) {
        if (num_identities == 0)
            raise(ErrorClass::dimension, "world: need at least one identity");
        if (!(sigma > 0.0))
            raise(ErrorClass::usage, "world: intra_noise_sigma must be > 0");
        IdentityWorld w;
        w.latent_dim = latent_dim;
        w.intra_noise_sigma = sigma;
        w.seed = seed;
        w.latents = Mat64(num_identities, latent_dim);
        SeededRng rng(seed, 0x574f524c); // "WORL"
        for (double& v : w.latents.values) v = rng.next_gauss();
        return w;
    }

    std::size_t num_identities() const { return latents.rows; }

    void check_identity(std::size_t id) const {
        if (id >= num_identities())
            raise(ErrorClass::dimension,
                  "world: unknown identity " + std::to_string(id));
    }
};

// k intra-class views of one identity: latent + sigma * gauss noise.
inline Mat64 sample_views(const IdentityWorld& w, std::size_t identity,
                          std::size_t k, SeededRng& rng) {
    w.check_identity(identity);
    if (k == 0) raise(ErrorClass::usage, "sample_views: k must be >= 1");
    Mat64 views(k, w.latent_dim);
    const double* z = w.latents.row(identity);
    for (std::size_t v = 0; v < k; ++v) {
        double* row = views.row(v);
        for (std::size_t i = 0; i < w.latent_dim; ++i)
            row[i] = z[i] + w.intra_noise_sigma * rng.next_gauss();
    }
    return views;
}

// Per-identity view stream, independent of iteration order.
inline SeededRng view_rng(std::uint64_t view_seed, std::size_t identity) {
    return SeededRng(view_seed, 0x56494557).substream(identity); // "VIEW"
}

// Seeded deterministic feature extractor: gaussian-weight tanh layers,
// linear last layer, output normalized to the unit sphere.
struct ExtractorSpec {
    std::uint64_t seed = 0;
    std::vector<std::size_t> widths; // in -> ... -> D
    std::vector<Mat64> weights;      // materialized at construction

    static ExtractorSpec make(std::uint64_t seed, std::vector<std::size_t> widths) {
        if (widths.size() < 2)
            raise(ErrorClass::dimension, "extractor: need at least 2 widths");
        ExtractorSpec e;
        e.seed = seed;
        e.widths = std::move(widths);
        SeededRng rng(seed, 0x45585452); // "EXTR"
        for (std::size_t l = 0; l + 1 < e.widths.size(); ++l) {
            Mat64 w(e.widths[l + 1], e.widths[l]);
            const double scale = 1.0 / std::sqrt(static_cast<double>(e.widths[l]));
            for (double& v : w.values) v = rng.next_gauss() * scale;
            e.weights.push_back(std::move(w));
        }
        return e;
    }

    std::size_t in_dim() const { return widths.front(); }
    std::size_t out_dim() const { return widths.back(); }

    Mat64 extract_batch(const Mat64& z) const {
        if (z.cols != in_dim())
            raise(ErrorClass::dimension, "extract: input dim " + std::to_string(z.cols) +
                                             " != " + std::to_string(in_dim()));
        Mat64 cur = z;
        Mat64 next;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            matmul_nt(cur, weights[l], next);
            if (l + 1 < weights.size())
                for (double& v : next.values) v = std::tanh(v);
            cur = std::move(next);
        }
        for (std::size_t r = 0; r < cur.rows; ++r) normalize_in_place(cur.row_span(r));
        return cur;
    }

    Vec64 extract(const Vec64& z) const {
        Mat64 zin(1, z.size());
        zin.set_row(0, z);
        return extract_batch(zin).row_vec(0);
    }

    std::string tag() const {
        std::string t = "ext:" + std::to_string(seed) + ":";
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (i) t += "-";
            t += std::to_string(widths[i]);
        }
        return t;
    }
};

struct ScoreSummary {
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
    std::size_t count = 0;

    static ScoreSummary of(const std::vector<double>& s) {
        ScoreSummary r;
        r.count = s.size();
        if (s.empty()) return r;
        r.min = s.front();
        r.max = s.front();
        double acc = 0.0;
        for (double v : s) {
            acc += v;
            r.min = std::min(r.min, v);
            r.max = std::max(r.max, v);
        }
        r.mean = acc / static_cast<double>(s.size());
        double sq = 0.0;
        for (double v : s) sq += (v - r.mean) * (v - r.mean);
        r.stddev = std::sqrt(sq / static_cast<double>(s.size()));
        return r;
    }
};

struct VerifierCalibration {
    double far_target = 0.01;
    double threshold = 0.0;
    std::size_t num_impostor_pairs = 0;
    ScoreSummary genuine, impostor;
};

// Smallest observed score t with |{s : s >= t}| <= floor(far * n); ties are
// resolved toward the stricter (higher) threshold. If even the top score
// overshoots, the threshold is nudged just above it.
inline double threshold_for_far(std::vector<double> scores, double far_target) {
    if (scores.empty())
        raise(ErrorClass::dimension, "threshold_for_far: no impostor scores");
    if (!(far_target > 0.0 && far_target <= 1.0))
        raise(ErrorClass::usage, "threshold_for_far: far_target must be in (0, 1]");
    std::sort(scores.begin(), scores.end(), std::greater<>());
    const std::size_t n = scores.size();
    const auto kmax = static_cast<std::size_t>(
        std::floor(far_target * static_cast<double>(n)));
    if (kmax >= n) return scores.back();
    if (kmax == 0)
        return std::nextafter(scores.front(), std::numeric_limits<double>::infinity());
    std::size_t j = kmax - 1;
    while (scores[j] == scores[kmax]) {
        // tied run spills past kmax; back up to the previous distinct value
        while (j > 0 && scores[j - 1] == scores[j]) --j;
        if (j == 0)
            return std::nextafter(scores.front(),
                                  std::numeric_limits<double>::infinity());
        --j;
    }
    return scores[j];
}

// Verifier pipeline used for calibration and evaluation: the camera (the
// default extractor) turns a latent into an artifact embedding, the
// verifier's encoder re-encodes artifacts into its own space.
inline VerifierCalibration calibrate_far(const ExtractorSpec& verifier,
                                         const ExtractorSpec& camera,
                                         const IdentityWorld& world,
                                         double far_target, std::size_t n_pairs,
                                         SeededRng& rng,
                                         const Mat64* enrolled_encoded = nullptr) {
    const std::size_t n_id = world.num_identities();
    if (n_id < 2) raise(ErrorClass::dimension, "calibrate_far: need >= 2 identities");
    const std::size_t max_pairs = n_id * (n_id - 1);
    if (n_pairs > max_pairs)
        raise(ErrorClass::dimension,
              "calibrate_far: only " + std::to_string(max_pairs) +
                  " distinct impostor pairs available");

    Mat64 enrolled;
    if (enrolled_encoded) {
        enrolled = *enrolled_encoded;
    } else {
        enrolled = verifier.extract_batch(camera.extract_batch(world.latents));
    }

    // distinct ordered impostor pairs (probe identity, claimed identity)
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n_pairs);
    std::unordered_set<std::uint64_t> seen;
    while (pairs.size() < n_pairs) {
        const std::size_t a = rng.next_below(n_id);
        const std::size_t b = rng.next_below(n_id);
        if (a == b) continue;
        const std::uint64_t key = static_cast<std::uint64_t>(a) * n_id + b;
        if (!seen.insert(key).second) continue;
        pairs.emplace_back(a, b);
    }

    std::vector<double> impostor_scores;
    impostor_scores.reserve(n_pairs);
    for (const auto& [a, b] : pairs) {
        Mat64 view = sample_views(world, a, 1, rng);
        const Vec64 probe = verifier.extract(camera.extract(view.row_vec(0)));
        impostor_scores.push_back(dot(probe, enrolled.row_span(b)));
    }

    const std::size_t n_genuine = std::min<std::size_t>(n_pairs, 1000);
    std::vector<double> genuine_scores;
    genuine_scores.reserve(n_genuine);
    for (std::size_t i = 0; i < n_genuine; ++i) {
        const std::size_t a = i % n_id;
        Mat64 view = sample_views(world, a, 1, rng);
        const Vec64 probe = verifier.extract(camera.extract(view.row_vec(0)));
        genuine_scores.push_back(dot(probe, enrolled.row_span(a)));
    }

    VerifierCalibration cal;
    cal.far_target = far_target;
    cal.num_impostor_pairs = n_pairs;
    cal.threshold = threshold_for_far(impostor_scores, far_target);
    cal.impostor = ScoreSummary::of(impostor_scores);
    cal.genuine = ScoreSummary::of(genuine_scores);
    return cal;
}

struct ProbeScore {
    std::size_t identity = 0;
    double score = 0.0;
    bool accepted = false;
};

struct EvalReport {
    double asr = 0.0;
    std::size_t probes_total = 0;
    std::size_t probes_accepted = 0;
    double threshold = 0.0;
    std::string scenario;
    std::vector<ProbeScore> scores;
};

// Probe accepted iff cosine(probe, enrolled row of the claimed identity)
// >= threshold. Probes and enrolled rows must live in the same space.
inline EvalReport evaluate_asr(const Mat64& probes,
                               const std::vector<std::size_t>& probe_identity,
                               const Mat64& enrolled,
                               const std::vector<std::size_t>& enrolled_identity,
                               const VerifierCalibration& cal,
                               std::string scenario = {}) {
    if (probes.rows != probe_identity.size())
        raise(ErrorClass::dimension, "evaluate_asr: probe id count mismatch");
    if (enrolled.rows != enrolled_identity.size())
        raise(ErrorClass::dimension, "evaluate_asr: enrolled id count mismatch");
    if (probes.cols != enrolled.cols)
        raise(ErrorClass::dimension, "evaluate_asr: probe/enrolled dim mismatch");
    std::unordered_map<std::size_t, std::size_t> row_of;
    for (std::size_t r = 0; r < enrolled_identity.size(); ++r)
        row_of[enrolled_identity[r]] = r;

    EvalReport rep;
    rep.threshold = cal.threshold;
    rep.scenario = std::move(scenario);
    rep.probes_total = probes.rows;
    rep.scores.reserve(probes.rows);
    for (std::size_t p = 0; p < probes.rows; ++p) {
        const auto it = row_of.find(probe_identity[p]);
        if (it == row_of.end())
            raise(ErrorClass::dimension,
                  "evaluate_asr: probe identity " +
                      std::to_string(probe_identity[p]) + " not enrolled");
        const double s = cosine(probes.row_span(p), enrolled.row_span(it->second));
        const bool ok = s >= cal.threshold;
        rep.scores.push_back({probe_identity[p], s, ok});
        if (ok) ++rep.probes_accepted;
    }
    rep.asr = rep.probes_total == 0
                  ? 0.0
                  : static_cast<double>(rep.probes_accepted) /
                        static_cast<double>(rep.probes_total);
    return rep;
}

enum class FemKind { kan, mlp };

inline const char* fem_kind_name(FemKind k) {
    return k == FemKind::kan ? "kan" : "mlp";
}

enum class ProtectionKind { none, polyprotect, mlphash, slerpface };

inline const char* protection_name(ProtectionKind k) {
    switch (k) {
    case ProtectionKind::none: return "none";
    case ProtectionKind::polyprotect: return "polyprotect";
    case ProtectionKind::mlphash: return "mlphash";
    case ProtectionKind::slerpface: return "slerpface";
    }
    return "none";
}

struct ProtectionConfig {
    ProtectionKind kind = ProtectionKind::none;
    std::uint64_t seed = 0;
    double slerp_t = 0.5;
};

// Applies the configured scheme with per-user parameters. PolyProtect and
// SlerpFace derive user-specific parameters from (seed, user); MLP-Hash
// uses one fixed seed for all users, with the weights built once.
class Protector {
public:
    Protector(const ProtectionConfig& cfg, std::size_t dim) : cfg_(cfg), dim_(dim) {
        if (cfg_.kind == ProtectionKind::mlphash) {
            MlpHashParams p;
            p.seed = cfg_.seed;
            p.hidden = 512;
            p.out_bits = 512;
            hash_weights_ = MlpHashWeights::make(p, dim);
        }
    }

    ProtectionKind kind() const { return cfg_.kind; }

    Vec64 apply(std::size_t user_id, const Vec64& e) const {
        switch (cfg_.kind) {
        case ProtectionKind::none:
            return e;
        case ProtectionKind::polyprotect: {
            auto p = PolyProtectParams::generate(cfg_.seed, user_id);
            p.pad_to = dim_;
            return polyprotect(e, p);
        }
        case ProtectionKind::mlphash: {
            const auto bits = mlp_hash_with_weights(e, *hash_weights_);
            Vec64 out(bits.size());
            for (std::size_t i = 0; i < bits.size(); ++i)
                out[i] = static_cast<double>(bits[i]);
            return out;
        }
        case ProtectionKind::slerpface: {
            SlerpFaceParams p;
            p.t = cfg_.slerp_t;
            p.noise_seed = SeededRng::mix(cfg_.seed ^ SeededRng::mix(user_id + 1));
            return slerp_protect(e, p);
        }
        }
        return e;
    }

private:
    ProtectionConfig cfg_;
    std::size_t dim_ = 0;
    std::optional<MlpHashWeights> hash_weights_;
};

// Mapping-side scaling convention: the FEM operates on embeddings scaled
// so entries are O(1) (a unit vector in R^D has entries ~ 1/sqrt(D), which
// would leave spline grids unexercised). Each vector is scaled to a fixed
// RMS entry: x * rms * sqrt(dim)/|x|. Zero vectors pass through unchanged.
inline void fem_scale_in_place(std::span<double> v, double rms = 1.0) {
    const double n = norm(v);
    if (n == 0.0) return;
    const double s = rms * std::sqrt(static_cast<double>(v.size())) / n;
    for (double& x : v) x *= s;
}

inline void fem_scale_rows(Mat64& m, double rms = 1.0) {
    for (std::size_t r = 0; r < m.rows; ++r) fem_scale_in_place(m.row_span(r), rms);
}

struct ScenarioConfig {
    std::size_t num_identities = 200;
    std::size_t latent_dim = 64;
    std::size_t embed_dim = 512;
    std::size_t extractor_hidden = 256;
    double intra_noise_sigma = 0.1;
    std::uint64_t world_seed = 1;
    std::uint64_t target_seed = 2;
    std::uint64_t default_seed = 3;
    std::vector<std::uint64_t> verifier_seeds = {4, 5};
    std::size_t train_views = 20;
    std::size_t probe_views = 1;
    FemKind kind = FemKind::kan;
    std::size_t kan_grid = 5;
    std::size_t kan_order = 3;
    std::size_t hidden_dim = 0; // 0: use embed_dim
    ProtectionConfig protection;
    std::optional<double> leak_rho;
    TrainConfig train;
    double far_target = 0.01;
    std::size_t calibration_pairs = 10000;
    std::uint64_t view_seed = 100;
    std::uint64_t calibration_seed = 200;
    double scale_rms = 1.0; // RMS entry scale at the mapping boundary

    std::size_t hidden() const { return hidden_dim == 0 ? embed_dim : hidden_dim; }

    std::size_t num_train_identities() const {
        auto n = static_cast<std::size_t>(
            std::floor(train.train_fraction * static_cast<double>(num_identities)));
        n = std::max<std::size_t>(n, 1);
        return std::min(n, num_identities - 1);
    }

    std::string descriptor() const {
        std::string d = std::string("kind=") + fem_kind_name(kind) +
                        " target=" + std::to_string(target_seed) +
                        " protection=" + protection_name(protection.kind);
        if (leak_rho) d += " leak_rho=" + std::to_string(*leak_rho);
        return d;
    }

    void validate() const {
        if (verifier_seeds.size() < 2)
            raise(ErrorClass::usage, "scenario: need at least 2 verifier seeds");
        std::unordered_set<std::uint64_t> seen;
        for (auto s : verifier_seeds) {
            if (s == target_seed || s == default_seed)
                raise(ErrorClass::usage,
                      "scenario: verifier seed " + std::to_string(s) +
                          " collides with target/default extractor seed");
            if (!seen.insert(s).second)
                raise(ErrorClass::usage, "scenario: duplicate verifier seed");
        }
        if (num_identities < 10)
            raise(ErrorClass::usage, "scenario: need at least 10 identities");
        train.validate();
    }
};

struct VerifierResult {
    std::uint64_t seed = 0;
    VerifierCalibration calibration;
    EvalReport mapped;   // FEM-mapped probes
    EvalReport unmapped; // raw target embeddings as probes (baseline)
};

struct ScenarioResult {
    std::vector<double> loss_trace;
    std::vector<VerifierResult> verifiers;

    double min_mapped_asr() const {
        double m = 1.0;
        for (const auto& v : verifiers) m = std::min(m, v.mapped.asr);
        return m;
    }
    double mean_mapped_asr() const {
        double m = 0.0;
        for (const auto& v : verifiers) m += v.mapped.asr;
        return verifiers.empty() ? 0.0 : m / static_cast<double>(verifiers.size());
    }
};

using FemModel = std::variant<FemKan, FemMlp>;

// Everything a scenario builds before/while training, reusable for probe
// re-evaluation (leakage sweeps re-map probes without retraining).
struct ScenarioContext {
    ScenarioConfig cfg;
    IdentityWorld world;
    ExtractorSpec target, camera;
    std::vector<ExtractorSpec> verifiers;
    std::vector<VerifierCalibration> calibrations;
    std::vector<Mat64> enrolled_encoded; // per verifier: N x D
    Protector protector;
    FemModel model;
    std::vector<double> loss_trace;

    // held-out probe inputs (target embeddings, protection applied)
    Mat64 probe_inputs;
    std::vector<std::size_t> probe_ids;

    explicit ScenarioContext(const ScenarioConfig& c)
        : cfg(c),
          world(IdentityWorld::synth(c.num_identities, c.latent_dim,
                                     c.intra_noise_sigma, c.world_seed)),
          target(ExtractorSpec::make(c.target_seed,
                                     {c.latent_dim, c.extractor_hidden, c.embed_dim})),
          camera(ExtractorSpec::make(c.default_seed,
                                     {c.latent_dim, c.extractor_hidden, c.embed_dim})),
          protector(c.protection, c.embed_dim) {
        cfg.validate();
        for (auto s : cfg.verifier_seeds)
            verifiers.push_back(ExtractorSpec::make(
                s, {cfg.embed_dim, cfg.extractor_hidden, cfg.embed_dim}));
        const Mat64 artifacts = camera.extract_batch(world.latents);
        for (std::size_t v = 0; v < verifiers.size(); ++v) {
            enrolled_encoded.push_back(verifiers[v].extract_batch(artifacts));
            SeededRng cal_rng =
                SeededRng(cfg.calibration_seed, 0x43414c).substream(v); // "CAL"
            calibrations.push_back(calibrate_far(verifiers[v], camera, world,
                                                 cfg.far_target, cfg.calibration_pairs,
                                                 cal_rng, &enrolled_encoded.back()));
        }
    }

    // Training pairs over train identities: input = protected target
    // embedding of a view, output = default embedding of the same view.
    void build_training_pairs(Mat64& inputs, Mat64& targets) const {
        const std::size_t n_train = cfg.num_train_identities();
        const std::size_t rows = n_train * cfg.train_views;
        inputs = Mat64(rows, cfg.embed_dim);
        targets = Mat64(rows, cfg.embed_dim);
        std::size_t r = 0;
        for (std::size_t id = 0; id < n_train; ++id) {
            SeededRng vr = view_rng(cfg.view_seed, id);
            Mat64 views = sample_views(world, id, cfg.train_views, vr);
            for (std::size_t v = 0; v < cfg.train_views; ++v, ++r) {
                const Vec64 view = views.row_vec(v);
                Vec64 in = protector.apply(id, target.extract(view));
                inputs.set_row(r, in);
                targets.set_row(r, camera.extract(view));
            }
        }
        fem_scale_rows(inputs, cfg.scale_rms);
        fem_scale_rows(targets, cfg.scale_rms);
    }

    void build_probes() {
        const std::size_t n_train = cfg.num_train_identities();
        const std::size_t n_test = world.num_identities() - n_train;
        probe_inputs = Mat64(n_test * cfg.probe_views, cfg.embed_dim);
        probe_ids.clear();
        std::size_t r = 0;
        for (std::size_t id = n_train; id < world.num_identities(); ++id) {
            SeededRng vr = view_rng(cfg.view_seed, id);
            Mat64 views = sample_views(world, id, cfg.probe_views, vr);
            for (std::size_t v = 0; v < cfg.probe_views; ++v, ++r) {
                probe_inputs.set_row(
                    r, protector.apply(id, target.extract(views.row_vec(v))));
                probe_ids.push_back(id);
            }
        }
    }

    void train() {
        Mat64 inputs, targets;
        build_training_pairs(inputs, targets);
        const std::vector<std::size_t> dims = {cfg.embed_dim, cfg.hidden(),
                                               cfg.hidden(), cfg.embed_dim};
        if (cfg.kind == FemKind::kan)
            model = FemKan::init(dims, cfg.kan_grid, cfg.kan_order, cfg.train.seed);
        else
            model = FemMlp::init(dims, cfg.train.seed);
        loss_trace = std::visit(
            [&](auto& m) { return train_fem(m, inputs, targets, cfg.train); }, model);
    }

    // Maps probe inputs (optionally leaked first) and normalizes the
    // result: the attack artifact is a unit vector in the camera's space.
    Mat64 map_probes(std::optional<double> leak_rho) {
        Mat64 in = probe_inputs;
        if (leak_rho) {
            for (std::size_t r = 0; r < in.rows; ++r) {
                Vec64 leaked = partial_leak(in.row_vec(r), *leak_rho);
                in.set_row(r, leaked);
            }
        }
        fem_scale_rows(in, cfg.scale_rms);
        Mat64 mapped = std::visit([&](auto& m) { return m.forward(in); }, model);
        for (std::size_t r = 0; r < mapped.rows; ++r) {
            if (norm(mapped.row_span(r)) == 0.0) continue;
            normalize_in_place(mapped.row_span(r));
        }
        return mapped;
    }

    std::vector<std::size_t> all_identities() const {
        std::vector<std::size_t> ids(world.num_identities());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        return ids;
    }

    // Evaluates a batch of attack artifacts against every verifier.
    std::vector<VerifierResult> evaluate(const Mat64& artifacts,
                                         const Mat64& baseline_artifacts,
                                         const std::string& descriptor) {
        std::vector<VerifierResult> out;
        const auto ids = all_identities();
        for (std::size_t v = 0; v < verifiers.size(); ++v) {
            VerifierResult res;
            res.seed = cfg.verifier_seeds[v];
            res.calibration = calibrations[v];
            const Mat64 enc = verifiers[v].extract_batch(artifacts);
            res.mapped = evaluate_asr(enc, probe_ids, enrolled_encoded[v], ids,
                                      calibrations[v], descriptor + " probes=mapped");
            const Mat64 enc_base = verifiers[v].extract_batch(baseline_artifacts);
            res.unmapped =
                evaluate_asr(enc_base, probe_ids, enrolled_encoded[v], ids,
                             calibrations[v], descriptor + " probes=unmapped");
            out.push_back(std::move(res));
        }
        return out;
    }
};

inline Mat64 normalized_rows(Mat64 m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (norm(m.row_span(r)) == 0.0) continue;
        normalize_in_place(m.row_span(r));
    }
    return m;
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    ScenarioContext ctx(cfg);
    ctx.train();
    ctx.build_probes();
    const Mat64 mapped = ctx.map_probes(cfg.leak_rho);
    Mat64 baseline = ctx.probe_inputs;
    if (cfg.leak_rho) {
        for (std::size_t r = 0; r < baseline.rows; ++r) {
            Vec64 leaked = partial_leak(baseline.row_vec(r), *cfg.leak_rho);
            baseline.set_row(r, leaked);
        }
    }
    baseline = normalized_rows(std::move(baseline));
    ScenarioResult result;
    result.loss_trace = ctx.loss_trace;
    result.verifiers = ctx.evaluate(mapped, baseline, cfg.descriptor());
    return result;
}

// Trains once on complete embeddings, then evaluates probes leaked at each
// rho (leakage is an inference-time condition).
inline std::vector<std::pair<double, ScenarioResult>>
run_leakage_sweep(const ScenarioConfig& cfg, const std::vector<double>& rhos) {
    ScenarioConfig base = cfg;
    base.leak_rho.reset();
    ScenarioContext ctx(base);
    ctx.train();
    ctx.build_probes();
    std::vector<std::pair<double, ScenarioResult>> out;
    for (double rho : rhos) {
        const Mat64 mapped = ctx.map_probes(rho);
        Mat64 baseline = ctx.probe_inputs;
        for (std::size_t r = 0; r < baseline.rows; ++r) {
            Vec64 leaked = partial_leak(baseline.row_vec(r), rho);
            baseline.set_row(r, leaked);
        }
        baseline = normalized_rows(std::move(baseline));
        ScenarioResult res;
        res.loss_trace = ctx.loss_trace;
        res.verifiers = ctx.evaluate(
            mapped, baseline, base.descriptor() + " leak_rho=" + std::to_string(rho));
        out.emplace_back(rho, std::move(res));
    }
    return out;
}

} // namespace fem
