#pragma once

// Versioned, line-oriented text formats for datasets, model checkpoints,
// verifier calibrations, and scenario configs. Floats are written as
// lowercase C99 hexadecimal literals so every round trip is bit-exact and
// no format depends on platform or locale. Files are written to a
// temporary path and renamed into place.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fem/numkit.hpp"
#include "fem/simbench.hpp"

namespace fem {

inline std::string encode_double(double v) {
    if (!std::isfinite(v))
        raise(ErrorClass::numeric, "encode: non-finite value");
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double decode_double(const std::string& tok, std::size_t line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        raise(ErrorClass::format,
              "line " + std::to_string(line) + ": malformed float literal '" + tok + "'");
    if (!std::isfinite(v))
        raise(ErrorClass::format,
              "line " + std::to_string(line) + ": non-finite float literal");
    return v;
}

inline std::uint64_t decode_u64(const std::string& tok, std::size_t line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0')
        raise(ErrorClass::format,
              "line " + std::to_string(line) + ": malformed integer '" + tok + "'");
    return v;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

namespace detail {

class AtomicWriter {
public:
    explicit AtomicWriter(const std::filesystem::path& path)
        : path_(path), tmp_(path.string() + ".tmp") {
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) raise(ErrorClass::io, "cannot open for writing: " + tmp_.string());
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.flush();
        if (!out_) raise(ErrorClass::io, "write failed: " + tmp_.string());
        out_.close();
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
        if (ec) raise(ErrorClass::io, "rename failed: " + path_.string());
    }

private:
    std::filesystem::path path_, tmp_;
    std::ofstream out_;
};

inline std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorClass::io, "cannot open: " + path.string());
    return in;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dataset files: FEMDS
// ---------------------------------------------------------------------------

enum class Split { train, test };

inline const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

inline Split parse_split(const std::string& s, std::size_t line) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    raise(ErrorClass::format, "line " + std::to_string(line) + ": unknown split tag '" + s + "'");
}

struct DatasetFile {
    static constexpr std::uint32_t current_version = 1;
    std::size_t dim = 0;
    std::string extractor_tag; // single whitespace-free token
    struct Row {
        std::uint64_t identity = 0;
        Split split = Split::train;
        Vec64 values;
    };
    std::vector<Row> rows;

    Mat64 to_matrix() const {
        Mat64 m(rows.size(), dim);
        for (std::size_t r = 0; r < rows.size(); ++r) m.set_row(r, rows[r].values);
        return m;
    }
};

inline void save_dataset(const DatasetFile& ds, const std::filesystem::path& path) {
    if (ds.extractor_tag.find_first_of(" \t\n") != std::string::npos)
        raise(ErrorClass::format, "dataset tag must not contain whitespace");
    detail::AtomicWriter w(path);
    auto& out = w.stream();
    out << "FEMDS\t" << DatasetFile::current_version << '\t' << ds.dim << '\t'
        << ds.extractor_tag << '\n';
    for (const auto& row : ds.rows) {
        if (row.values.size() != ds.dim)
            raise(ErrorClass::dimension, "dataset row width != header dim");
        out << row.identity << '\t' << split_name(row.split);
        for (double v : row.values) out << '\t' << encode_double(v);
        out << '\n';
    }
    w.commit();
}

inline DatasetFile load_dataset(const std::filesystem::path& path) {
    std::ifstream in = detail::open_for_read(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        raise(ErrorClass::format, "empty file: " + path.string());
    ++lineno;
    auto header = split_tabs(line);
    if (header.empty() || header[0] != "FEMDS")
        raise(ErrorClass::format, "line 1: bad magic (expected FEMDS)");
    if (header.size() != 4)
        raise(ErrorClass::format, "line 1: malformed FEMDS header");
    const std::uint64_t version = decode_u64(header[1], 1);
    if (version != DatasetFile::current_version)
        raise(ErrorClass::format,
              "line 1: unsupported FEMDS version " + std::to_string(version));
    DatasetFile ds;
    ds.dim = decode_u64(header[2], 1);
    ds.extractor_tag = header[3];
    if (ds.dim == 0) raise(ErrorClass::format, "line 1: dim must be positive");
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != ds.dim + 2)
            raise(ErrorClass::dimension,
                  "line " + std::to_string(lineno) + ": expected " +
                      std::to_string(ds.dim + 2) + " fields, got " +
                      std::to_string(fields.size()));
        DatasetFile::Row row;
        row.identity = decode_u64(fields[0], lineno);
        row.split = parse_split(fields[1], lineno);
        row.values.resize(ds.dim);
        for (std::size_t i = 0; i < ds.dim; ++i)
            row.values[i] = decode_double(fields[i + 2], lineno);
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

// Identity worlds are dataset files whose tag carries sigma and seed.
inline std::string world_tag(const IdentityWorld& w) {
    return "world:sigma=" + encode_double(w.intra_noise_sigma) +
           ":seed=" + std::to_string(w.seed);
}

inline void save_world(const IdentityWorld& w, const std::vector<Split>& splits,
                       const std::filesystem::path& path) {
    if (splits.size() != w.num_identities())
        raise(ErrorClass::dimension, "save_world: split count mismatch");
    DatasetFile ds;
    ds.dim = w.latent_dim;
    ds.extractor_tag = world_tag(w);
    for (std::size_t i = 0; i < w.num_identities(); ++i)
        ds.rows.push_back({i, splits[i], w.latents.row_vec(i)});
    save_dataset(ds, path);
}

struct LoadedWorld {
    IdentityWorld world;
    std::vector<Split> splits;
    std::vector<std::uint64_t> identities;
};

inline LoadedWorld load_world(const std::filesystem::path& path) {
    DatasetFile ds = load_dataset(path);
    if (ds.extractor_tag.rfind("world:sigma=", 0) != 0)
        raise(ErrorClass::format, "not a world file (tag '" + ds.extractor_tag + "')");
    const std::string rest = ds.extractor_tag.substr(std::string("world:sigma=").size());
    const std::size_t sep = rest.find(":seed=");
    if (sep == std::string::npos)
        raise(ErrorClass::format, "world tag missing seed field");
    LoadedWorld lw;
    lw.world.latent_dim = ds.dim;
    lw.world.intra_noise_sigma = decode_double(rest.substr(0, sep), 1);
    lw.world.seed = decode_u64(rest.substr(sep + std::string(":seed=").size()), 1);
    lw.world.latents = Mat64(ds.rows.size(), ds.dim);
    for (std::size_t r = 0; r < ds.rows.size(); ++r) {
        lw.world.latents.set_row(r, ds.rows[r].values);
        lw.splits.push_back(ds.rows[r].split);
        lw.identities.push_back(ds.rows[r].identity);
    }
    return lw;
}

// ---------------------------------------------------------------------------
// Checkpoint files: FEMCKPT
// ---------------------------------------------------------------------------

namespace detail {

inline void write_block(std::ofstream& out, const ParamBlock& b) {
    out << "block\t" << b.name << '\t' << b.shape.size();
    for (auto s : b.shape) out << '\t' << s;
    out << '\n';
    // one line per leading-dimension slice keeps lines bounded
    std::size_t per_line = b.size();
    if (b.shape.size() > 1) per_line = b.size() / b.shape[0];
    for (std::size_t i = 0; i < b.size(); ++i) {
        out << encode_double(b.value[i]);
        out << (((i + 1) % per_line == 0) ? '\n' : '\t');
    }
}

struct BlockReader {
    std::ifstream& in;
    std::size_t& lineno;

    // reads exactly n doubles spread over whitespace/lines
    void read_values(std::span<double> dst, const std::string& block_name) {
        std::size_t got = 0;
        std::string line;
        while (got < dst.size()) {
            if (!std::getline(in, line))
                raise(ErrorClass::format,
                      "line " + std::to_string(lineno + 1) + ": block '" + block_name +
                          "' truncated (" + std::to_string(got) + "/" +
                          std::to_string(dst.size()) + " values)");
            ++lineno;
            std::size_t start = 0;
            while (start < line.size()) {
                std::size_t end = line.find('\t', start);
                if (end == std::string::npos) end = line.size();
                if (end > start) {
                    const std::string tok = line.substr(start, end - start);
                    if (got >= dst.size())
                        raise(ErrorClass::format,
                              "line " + std::to_string(lineno) + ": block '" +
                                  block_name + "' has excess values");
                    dst[got++] = decode_double(tok, lineno);
                }
                start = end + 1;
            }
        }
    }
};

} // namespace detail

inline const char* checkpoint_kind(const FemKan&) { return "kan"; }
inline const char* checkpoint_kind(const FemMlp&) { return "mlp"; }

template <class Model>
void save_model(Model& model, const std::filesystem::path& path) {
    detail::AtomicWriter w(path);
    auto& out = w.stream();
    out << "FEMCKPT\t1\t" << checkpoint_kind(model) << '\n';
    out << "dims";
    for (auto d : model.dims()) out << '\t' << d;
    out << '\n';
    if constexpr (std::is_same_v<Model, FemKan>) {
        const auto& g = model.layers.front().grid;
        out << "grid_size\t" << g.grid_size << '\n';
        out << "order\t" << g.order << '\n';
        out << "grid_lo\t" << encode_double(g.lo) << '\n';
        out << "grid_hi\t" << encode_double(g.hi) << '\n';
    } else {
        out << "bn_eps\t" << encode_double(model.layers.front().bn_eps) << '\n';
        out << "bn_momentum\t" << encode_double(model.layers.front().bn_momentum) << '\n';
    }
    for (const auto& b : model.state_blocks()) detail::write_block(out, b);
    out << "end\n";
    w.commit();
}

namespace detail {

inline std::vector<std::string> expect_line(std::ifstream& in, std::size_t& lineno,
                                            const char* what) {
    std::string line;
    if (!std::getline(in, line))
        raise(ErrorClass::format, "line " + std::to_string(lineno + 1) +
                                      ": unexpected end of file (wanted " + what + ")");
    ++lineno;
    return split_tabs(line);
}

template <class Model>
void load_blocks(Model& model, std::ifstream& in, std::size_t& lineno) {
    auto blocks = model.state_blocks();
    std::vector<bool> filled(blocks.size(), false);
    while (true) {
        auto fields = expect_line(in, lineno, "block or end");
        if (fields.size() == 1 && fields[0] == "end") break;
        if (fields.empty() || fields[0] != "block")
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": expected block header");
        if (fields.size() < 3)
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": malformed block header");
        const std::string& name = fields[1];
        const std::uint64_t ndims = decode_u64(fields[2], lineno);
        if (fields.size() != 3 + ndims)
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": block rank/field mismatch");
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::size_t d = 0; d < ndims; ++d) {
            shape.push_back(decode_u64(fields[3 + d], lineno));
            total *= shape.back();
        }
        std::size_t idx = blocks.size();
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].name == name) {
                idx = i;
                break;
            }
        if (idx == blocks.size())
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": unknown block '" + name + "'");
        if (filled[idx])
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": duplicate block '" + name + "'");
        if (shape != blocks[idx].shape || total != blocks[idx].size())
            raise(ErrorClass::dimension,
                  "line " + std::to_string(lineno) + ": block '" + name +
                      "' shape inconsistent with model dims");
        BlockReader reader{in, lineno};
        reader.read_values(blocks[idx].value, name);
        filled[idx] = true;
    }
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (!filled[i])
            raise(ErrorClass::format, "checkpoint missing block '" + blocks[i].name + "'");
}

} // namespace detail

struct LoadedModel {
    FemKind kind;
    FemModel model;

    FemKan& kan() { return std::get<FemKan>(model); }
    FemMlp& mlp() { return std::get<FemMlp>(model); }
};

inline LoadedModel load_model(const std::filesystem::path& path,
                              std::optional<FemKind> expected_kind = {}) {
    std::ifstream in = detail::open_for_read(path);
    std::size_t lineno = 0;
    auto header = detail::expect_line(in, lineno, "FEMCKPT header");
    if (header.empty() || header[0] != "FEMCKPT")
        raise(ErrorClass::format, "line 1: bad magic (expected FEMCKPT)");
    if (header.size() != 3)
        raise(ErrorClass::format, "line 1: malformed FEMCKPT header");
    if (decode_u64(header[1], 1) != 1)
        raise(ErrorClass::format, "line 1: unsupported FEMCKPT version");
    const std::string& kind_str = header[2];
    FemKind kind;
    if (kind_str == "kan")
        kind = FemKind::kan;
    else if (kind_str == "mlp")
        kind = FemKind::mlp;
    else
        raise(ErrorClass::format, "line 1: unknown model kind '" + kind_str + "'");
    if (expected_kind && *expected_kind != kind)
        raise(ErrorClass::format,
              "checkpoint kind '" + kind_str + "' does not match expected kind");

    auto dims_line = detail::expect_line(in, lineno, "dims");
    if (dims_line.size() != 5 || dims_line[0] != "dims")
        raise(ErrorClass::format,
              "line " + std::to_string(lineno) + ": expected 'dims' with 4 entries");
    std::vector<std::size_t> dims;
    for (std::size_t i = 1; i < dims_line.size(); ++i) {
        dims.push_back(decode_u64(dims_line[i], lineno));
        if (dims.back() == 0)
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": zero dimension");
    }

    auto read_kv = [&](const char* key) -> std::string {
        auto f = detail::expect_line(in, lineno, key);
        if (f.size() != 2 || f[0] != key)
            raise(ErrorClass::format, "line " + std::to_string(lineno) +
                                          ": expected '" + key + "'");
        return f[1];
    };

    LoadedModel lm;
    lm.kind = kind;
    if (kind == FemKind::kan) {
        const auto grid_size = decode_u64(read_kv("grid_size"), lineno);
        const auto order = decode_u64(read_kv("order"), lineno);
        const double lo = decode_double(read_kv("grid_lo"), lineno);
        const double hi = decode_double(read_kv("grid_hi"), lineno);
        lm.model = FemKan::init(dims, grid_size, order, /*seed=*/0, lo, hi);
        detail::load_blocks(std::get<FemKan>(lm.model), in, lineno);
    } else {
        const double eps = decode_double(read_kv("bn_eps"), lineno);
        const double momentum = decode_double(read_kv("bn_momentum"), lineno);
        lm.model = FemMlp::init(dims, /*seed=*/0);
        auto& m = std::get<FemMlp>(lm.model);
        for (auto& layer : m.layers) {
            layer.bn_eps = eps;
            layer.bn_momentum = momentum;
        }
        detail::load_blocks(m, in, lineno);
    }
    return lm;
}

// ---------------------------------------------------------------------------
// Calibration files: FEMCAL
// ---------------------------------------------------------------------------

inline void save_calibration(const VerifierCalibration& cal,
                             const std::filesystem::path& path) {
    detail::AtomicWriter w(path);
    auto& out = w.stream();
    out << "FEMCAL\t1\n";
    out << "far_target\t" << encode_double(cal.far_target) << '\n';
    out << "threshold\t" << encode_double(cal.threshold) << '\n';
    out << "num_impostor_pairs\t" << cal.num_impostor_pairs << '\n';
    auto dump = [&](const char* prefix, const ScoreSummary& s) {
        out << prefix << "_count\t" << s.count << '\n';
        out << prefix << "_mean\t" << encode_double(s.mean) << '\n';
        out << prefix << "_std\t" << encode_double(s.stddev) << '\n';
        out << prefix << "_min\t" << encode_double(s.min) << '\n';
        out << prefix << "_max\t" << encode_double(s.max) << '\n';
    };
    dump("impostor", cal.impostor);
    dump("genuine", cal.genuine);
    w.commit();
}

inline VerifierCalibration load_calibration(const std::filesystem::path& path) {
    std::ifstream in = detail::open_for_read(path);
    std::size_t lineno = 0;
    auto header = detail::expect_line(in, lineno, "FEMCAL header");
    if (header.empty() || header[0] != "FEMCAL")
        raise(ErrorClass::format, "line 1: bad magic (expected FEMCAL)");
    if (header.size() != 2 || decode_u64(header[1], 1) != 1)
        raise(ErrorClass::format, "line 1: unsupported FEMCAL version");
    VerifierCalibration cal;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_tabs(line);
        if (f.size() != 2)
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": expected key<TAB>value");
        const std::string& k = f[0];
        const std::string& v = f[1];
        if (k == "far_target") cal.far_target = decode_double(v, lineno);
        else if (k == "threshold") cal.threshold = decode_double(v, lineno);
        else if (k == "num_impostor_pairs") cal.num_impostor_pairs = decode_u64(v, lineno);
        else if (k == "impostor_count") cal.impostor.count = decode_u64(v, lineno);
        else if (k == "impostor_mean") cal.impostor.mean = decode_double(v, lineno);
        else if (k == "impostor_std") cal.impostor.stddev = decode_double(v, lineno);
        else if (k == "impostor_min") cal.impostor.min = decode_double(v, lineno);
        else if (k == "impostor_max") cal.impostor.max = decode_double(v, lineno);
        else if (k == "genuine_count") cal.genuine.count = decode_u64(v, lineno);
        else if (k == "genuine_mean") cal.genuine.mean = decode_double(v, lineno);
        else if (k == "genuine_std") cal.genuine.stddev = decode_double(v, lineno);
        else if (k == "genuine_min") cal.genuine.min = decode_double(v, lineno);
        else if (k == "genuine_max") cal.genuine.max = decode_double(v, lineno);
        else
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": unknown key '" + k + "'");
    }
    return cal;
}

// ---------------------------------------------------------------------------
// Scenario configs: flat key=value text
// ---------------------------------------------------------------------------

inline ScenarioConfig parse_scenario_config(std::istream& in) {
    ScenarioConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        auto as_u64 = [&] { return decode_u64(val, lineno); };
        auto as_f64 = [&] { return decode_double(val, lineno); };
        if (key == "identities") cfg.num_identities = as_u64();
        else if (key == "latent_dim") cfg.latent_dim = as_u64();
        else if (key == "embed_dim") cfg.embed_dim = as_u64();
        else if (key == "extractor_hidden") cfg.extractor_hidden = as_u64();
        else if (key == "sigma") cfg.intra_noise_sigma = as_f64();
        else if (key == "world_seed") cfg.world_seed = as_u64();
        else if (key == "target_seed") cfg.target_seed = as_u64();
        else if (key == "default_seed") cfg.default_seed = as_u64();
        else if (key == "verifier_seeds") {
            cfg.verifier_seeds.clear();
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ','))
                cfg.verifier_seeds.push_back(decode_u64(tok, lineno));
        } else if (key == "train_views") cfg.train_views = as_u64();
        else if (key == "probe_views") cfg.probe_views = as_u64();
        else if (key == "kind") {
            if (val == "kan") cfg.kind = FemKind::kan;
            else if (val == "mlp") cfg.kind = FemKind::mlp;
            else raise(ErrorClass::format,
                       "line " + std::to_string(lineno) + ": kind must be kan or mlp");
        } else if (key == "kan_grid") cfg.kan_grid = as_u64();
        else if (key == "kan_order") cfg.kan_order = as_u64();
        else if (key == "hidden_dim") cfg.hidden_dim = as_u64();
        else if (key == "protection") {
            if (val == "none") cfg.protection.kind = ProtectionKind::none;
            else if (val == "polyprotect") cfg.protection.kind = ProtectionKind::polyprotect;
            else if (val == "mlphash") cfg.protection.kind = ProtectionKind::mlphash;
            else if (val == "slerpface") cfg.protection.kind = ProtectionKind::slerpface;
            else raise(ErrorClass::format,
                       "line " + std::to_string(lineno) + ": unknown protection '" + val + "'");
        } else if (key == "protection_seed") cfg.protection.seed = as_u64();
        else if (key == "slerp_t") cfg.protection.slerp_t = as_f64();
        else if (key == "leak_rho") cfg.leak_rho = as_f64();
        else if (key == "far_target") cfg.far_target = as_f64();
        else if (key == "calibration_pairs") cfg.calibration_pairs = as_u64();
        else if (key == "view_seed") cfg.view_seed = as_u64();
        else if (key == "calibration_seed") cfg.calibration_seed = as_u64();
        else if (key == "scale_rms") cfg.scale_rms = as_f64();
        else if (key == "epochs") cfg.train.epochs = as_u64();
        else if (key == "lr0") cfg.train.lr0 = as_f64();
        else if (key == "decay_gamma") cfg.train.decay_gamma = as_f64();
        else if (key == "batch_size") cfg.train.batch_size = as_u64();
        else if (key == "weight_decay") cfg.train.weight_decay = as_f64();
        else if (key == "train_seed") cfg.train.seed = as_u64();
        else if (key == "train_fraction") cfg.train.train_fraction = as_f64();
        else
            raise(ErrorClass::format,
                  "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    std::ifstream in = detail::open_for_read(path);
    return parse_scenario_config(in);
}

// ---------------------------------------------------------------------------
// Report and trace emission
// ---------------------------------------------------------------------------

inline void write_loss_trace(std::ostream& out, const std::vector<double>& trace) {
    for (std::size_t e = 0; e < trace.size(); ++e)
        out << e << '\t' << trace[e] << '\n';
}

inline void write_eval_report(std::ostream& out, const EvalReport& rep,
                              bool with_scores = true) {
    out << "scenario=" << rep.scenario << '\n';
    out << "threshold=" << rep.threshold << '\n';
    out << "probes_total=" << rep.probes_total << '\n';
    out << "probes_accepted=" << rep.probes_accepted << '\n';
    out << "asr=" << rep.asr << '\n';
    if (!with_scores) return;
    out << "identity\tscore\taccepted\n";
    for (const auto& s : rep.scores)
        out << s.identity << '\t' << s.score << '\t' << (s.accepted ? 1 : 0) << '\n';
}

} // namespace fem
