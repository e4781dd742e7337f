// femtool: command-line surface over the embedding-mapping pipeline.
// Every command is a pure function of its flags, input files, and seeds;
// errors print one machine-parseable line to stderr and exit with a
// class-specific code (see README).

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "fem/fem.hpp"

namespace {

using namespace fem;

int report_error(const Error& e) {
    std::cerr << "error: class=" << e.class_name() << " code=" << e.exit_code()
              << " msg=\"" << e.what() << "\"\n";
    return e.exit_code();
}

std::vector<Split> default_splits(std::size_t n, double train_fraction) {
    auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(n)));
    n_train = std::max<std::size_t>(1, std::min(n_train, n - 1));
    std::vector<Split> s(n, Split::test);
    for (std::size_t i = 0; i < n_train; ++i) s[i] = Split::train;
    return s;
}

struct SynthArgs {
    std::size_t identities = 200;
    std::size_t latent_dim = 64;
    double sigma = 0.1;
    std::uint64_t seed = 1;
    double train_fraction = 0.9;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    IdentityWorld w = IdentityWorld::synth(a.identities, a.latent_dim, a.sigma, a.seed);
    save_world(w, default_splits(a.identities, a.train_fraction), a.out);
    std::cout << "world identities=" << a.identities << " latent_dim=" << a.latent_dim
              << " -> " << a.out << "\n";
    return 0;
}

struct ExtractArgs {
    std::string world_path;
    std::string in_path;
    std::uint64_t extractor_seed = 2;
    std::size_t dim = 512;
    std::size_t hidden = 256;
    std::size_t views = 1;
    std::uint64_t view_seed = 100;
    std::string out;
};

int cmd_extract(const ExtractArgs& a) {
    if (a.world_path.empty() == a.in_path.empty())
        raise(ErrorClass::usage, "extract: give exactly one of --world or --in");
    DatasetFile out_ds;
    out_ds.dim = a.dim;
    if (!a.world_path.empty()) {
        // sample views of each identity and embed them
        LoadedWorld lw = load_world(a.world_path);
        ExtractorSpec ext = ExtractorSpec::make(
            a.extractor_seed, {lw.world.latent_dim, a.hidden, a.dim});
        out_ds.extractor_tag = ext.tag();
        for (std::size_t r = 0; r < lw.world.num_identities(); ++r) {
            SeededRng vr = view_rng(a.view_seed, lw.identities[r]);
            Mat64 views = sample_views(lw.world, r, a.views, vr);
            Mat64 emb = ext.extract_batch(views);
            for (std::size_t v = 0; v < a.views; ++v)
                out_ds.rows.push_back({lw.identities[r], lw.splits[r], emb.row_vec(v)});
        }
    } else {
        // re-encode an existing embedding dataset row by row
        DatasetFile in_ds = load_dataset(a.in_path);
        ExtractorSpec ext =
            ExtractorSpec::make(a.extractor_seed, {in_ds.dim, a.hidden, a.dim});
        out_ds.extractor_tag = ext.tag() + "(" + in_ds.extractor_tag + ")";
        Mat64 emb = ext.extract_batch(in_ds.to_matrix());
        for (std::size_t r = 0; r < in_ds.rows.size(); ++r)
            out_ds.rows.push_back(
                {in_ds.rows[r].identity, in_ds.rows[r].split, emb.row_vec(r)});
    }
    save_dataset(out_ds, a.out);
    std::cout << "extracted rows=" << out_ds.rows.size() << " dim=" << out_ds.dim
              << " -> " << a.out << "\n";
    return 0;
}

struct ProtectArgs {
    std::string scheme = "polyprotect";
    std::string in_path;
    std::uint64_t seed = 7;
    double slerp_t = 0.5;
    std::string out;
};

int cmd_protect(const ProtectArgs& a) {
    DatasetFile ds = load_dataset(a.in_path);
    ProtectionConfig cfg;
    if (a.scheme == "polyprotect") cfg.kind = ProtectionKind::polyprotect;
    else if (a.scheme == "mlphash") cfg.kind = ProtectionKind::mlphash;
    else if (a.scheme == "slerpface") cfg.kind = ProtectionKind::slerpface;
    else raise(ErrorClass::usage, "protect: unknown scheme '" + a.scheme + "'");
    cfg.seed = a.seed;
    cfg.slerp_t = a.slerp_t;
    Protector protector(cfg, ds.dim);
    DatasetFile out_ds;
    out_ds.dim = ds.dim;
    out_ds.extractor_tag = std::string(protection_name(cfg.kind)) + ":" +
                           std::to_string(a.seed) + "(" + ds.extractor_tag + ")";
    for (const auto& row : ds.rows)
        out_ds.rows.push_back(
            {row.identity, row.split, protector.apply(row.identity, row.values)});
    save_dataset(out_ds, a.out);
    std::cout << "protected rows=" << out_ds.rows.size() << " scheme=" << a.scheme
              << " -> " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string kind = "kan";
    std::vector<std::string> pairs;
    std::size_t epochs = 20;
    double lr = 1e-2;
    double decay = 0.8;
    std::size_t batch = 128;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    std::size_t hidden = 0;
    std::size_t kan_grid = 5;
    std::size_t kan_order = 3;
    std::string out;
    std::string trace_out;
};

int cmd_train(const TrainArgs& a) {
    DatasetFile in_ds = load_dataset(a.pairs[0]);
    DatasetFile tgt_ds = load_dataset(a.pairs[1]);
    if (in_ds.rows.size() != tgt_ds.rows.size())
        raise(ErrorClass::dimension, "train: paired datasets differ in row count");
    Mat64 inputs(0, in_ds.dim), targets(0, tgt_ds.dim);
    std::vector<Vec64> in_rows, tgt_rows;
    for (std::size_t r = 0; r < in_ds.rows.size(); ++r) {
        if (in_ds.rows[r].identity != tgt_ds.rows[r].identity)
            raise(ErrorClass::dimension,
                  "train: row " + std::to_string(r) + " identity mismatch between pairs");
        if (in_ds.rows[r].split != Split::train) continue;
        in_rows.push_back(in_ds.rows[r].values);
        tgt_rows.push_back(tgt_ds.rows[r].values);
    }
    if (in_rows.empty()) raise(ErrorClass::dimension, "train: no rows tagged train");
    inputs = Mat64(in_rows.size(), in_ds.dim);
    targets = Mat64(tgt_rows.size(), tgt_ds.dim);
    for (std::size_t r = 0; r < in_rows.size(); ++r) {
        inputs.set_row(r, in_rows[r]);
        targets.set_row(r, tgt_rows[r]);
    }
    fem_scale_rows(inputs);
    fem_scale_rows(targets);

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.lr0 = a.lr;
    cfg.decay_gamma = a.decay;
    cfg.batch_size = a.batch;
    cfg.weight_decay = a.weight_decay;
    cfg.seed = a.seed;

    const std::size_t hidden = a.hidden == 0 ? tgt_ds.dim : a.hidden;
    const std::vector<std::size_t> dims = {in_ds.dim, hidden, hidden, tgt_ds.dim};
    std::vector<double> trace;
    if (a.kind == "kan") {
        FemKan m = FemKan::init(dims, a.kan_grid, a.kan_order, a.seed);
        trace = train_fem(m, inputs, targets, cfg);
        save_model(m, a.out);
    } else if (a.kind == "mlp") {
        FemMlp m = FemMlp::init(dims, a.seed);
        trace = train_fem(m, inputs, targets, cfg);
        save_model(m, a.out);
    } else {
        raise(ErrorClass::usage, "train: kind must be kan or mlp");
    }
    if (!a.trace_out.empty()) {
        detail::AtomicWriter w(a.trace_out);
        write_loss_trace(w.stream(), trace);
        w.commit();
    } else {
        write_loss_trace(std::cout, trace);
    }
    return 0;
}

struct MapArgs {
    std::string ckpt;
    std::string in_path;
    std::string out;
    bool no_normalize = false;
};

int cmd_map(const MapArgs& a) {
    LoadedModel lm = load_model(a.ckpt);
    DatasetFile ds = load_dataset(a.in_path);
    Mat64 in = ds.to_matrix();
    fem_scale_rows(in);
    Mat64 mapped = std::visit([&](auto& m) { return m.forward(in); }, lm.model);
    if (!a.no_normalize) mapped = normalized_rows(std::move(mapped));
    DatasetFile out_ds;
    out_ds.dim = mapped.cols;
    out_ds.extractor_tag = std::string("mapped-") + fem_kind_name(lm.kind) + "(" +
                           ds.extractor_tag + ")";
    for (std::size_t r = 0; r < ds.rows.size(); ++r)
        out_ds.rows.push_back({ds.rows[r].identity, ds.rows[r].split, mapped.row_vec(r)});
    save_dataset(out_ds, a.out);
    std::cout << "mapped rows=" << out_ds.rows.size() << " -> " << a.out << "\n";
    return 0;
}

struct CalibrateArgs {
    std::string world_path;
    std::uint64_t camera_seed = 3;
    std::uint64_t verifier_seed = 4;
    std::size_t dim = 512;
    std::size_t hidden = 256;
    double far = 0.01;
    std::size_t pairs = 10000;
    std::uint64_t seed = 200;
    std::string out;
};

int cmd_calibrate(const CalibrateArgs& a) {
    LoadedWorld lw = load_world(a.world_path);
    ExtractorSpec camera =
        ExtractorSpec::make(a.camera_seed, {lw.world.latent_dim, a.hidden, a.dim});
    ExtractorSpec verifier =
        ExtractorSpec::make(a.verifier_seed, {a.dim, a.hidden, a.dim});
    SeededRng rng(a.seed, 0x43414c);
    VerifierCalibration cal =
        calibrate_far(verifier, camera, lw.world, a.far, a.pairs, rng);
    save_calibration(cal, a.out);
    std::cout << "threshold=" << cal.threshold << " far_target=" << cal.far_target
              << " impostor_mean=" << cal.impostor.mean
              << " genuine_mean=" << cal.genuine.mean << " -> " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string probes_path;
    std::string enrolled_path;
    std::string calibration_path;
    std::string out;
    bool no_scores = false;
};

int cmd_eval(const EvalArgs& a) {
    DatasetFile probes = load_dataset(a.probes_path);
    DatasetFile enrolled = load_dataset(a.enrolled_path);
    VerifierCalibration cal = load_calibration(a.calibration_path);
    std::vector<std::size_t> probe_ids, enrolled_ids;
    for (const auto& r : probes.rows) probe_ids.push_back(r.identity);
    for (const auto& r : enrolled.rows) enrolled_ids.push_back(r.identity);
    EvalReport rep = evaluate_asr(probes.to_matrix(), probe_ids, enrolled.to_matrix(),
                                  enrolled_ids, cal,
                                  "probes=" + probes.extractor_tag);
    if (!a.out.empty()) {
        detail::AtomicWriter w(a.out);
        write_eval_report(w.stream(), rep, !a.no_scores);
        w.commit();
    } else {
        write_eval_report(std::cout, rep, !a.no_scores);
    }
    return 0;
}

struct GradcheckArgs {
    std::string kind = "kan";
    std::vector<std::size_t> dims = {4, 3, 2};
    std::size_t batch = 4;
    std::uint64_t seed = 1;
    double h = 1e-5;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    std::vector<std::size_t> dims = a.dims;
    if (dims.size() == 3) dims = {dims[0], dims[1], dims[1], dims[2]};
    if (dims.size() != 4)
        raise(ErrorClass::usage, "gradcheck: --dims wants 3 or 4 comma-separated sizes");
    Mat64 x(a.batch, dims.front());
    Mat64 y(a.batch, dims.back());
    SeededRng rng(a.seed, 0x4744);
    for (double& v : x.values) v = rng.next_gauss();
    for (double& v : y.values) v = rng.next_gauss();

    double worst = 0.0;
    auto run = [&](auto& model) {
        Mat64 grad;
        auto loss_bwd = [&]() {
            model.zero_grads();
            Mat64 pred = model.train_forward(x);
            const double loss = mse_loss_batch(y, pred, grad);
            model.train_backward(grad);
            return loss;
        };
        auto loss_only = [&]() {
            Mat64 pred = model.train_forward(x);
            Mat64 g;
            return mse_loss_batch(y, pred, g);
        };
        return grad_check(model, loss_bwd, loss_only, a.h);
    };
    if (a.kind == "kan") {
        FemKan m = FemKan::init(dims, 5, 3, a.seed);
        worst = run(m);
    } else if (a.kind == "mlp") {
        FemMlp m = FemMlp::init(dims, a.seed);
        worst = run(m);
    } else {
        raise(ErrorClass::usage, "gradcheck: kind must be kan or mlp");
    }
    std::cout << "max_relative_error=" << worst << "\n";
    if (worst >= 1e-5) {
        std::cerr << "error: class=numeric code=7 msg=\"gradient check failed\"\n";
        return static_cast<int>(ErrorClass::numeric);
    }
    return 0;
}

void print_verifier_result(const VerifierResult& v) {
    std::cout << "verifier_seed=" << v.seed << "\n";
    std::cout << "threshold=" << v.calibration.threshold << "\n";
    std::cout << "mapped_asr=" << v.mapped.asr << " (" << v.mapped.probes_accepted
              << "/" << v.mapped.probes_total << ")\n";
    std::cout << "unmapped_asr=" << v.unmapped.asr << " (" << v.unmapped.probes_accepted
              << "/" << v.unmapped.probes_total << ")\n";
}

int cmd_scenario(const std::string& config_path) {
    ScenarioConfig cfg = load_scenario_config(config_path);
    ScenarioResult res = run_scenario(cfg);
    std::cout << "# loss trace (epoch<TAB>loss)\n";
    write_loss_trace(std::cout, res.loss_trace);
    for (const auto& v : res.verifiers) print_verifier_result(v);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& rhos) {
    ScenarioConfig cfg = load_scenario_config(config_path);
    auto sweep = run_leakage_sweep(cfg, rhos);
    std::cout << "rho";
    for (const auto& v : sweep.front().second.verifiers)
        std::cout << "\tasr_v" << v.seed;
    std::cout << "\tasr_mean\n";
    for (const auto& [rho, res] : sweep) {
        std::cout << rho;
        for (const auto& v : res.verifiers) std::cout << '\t' << v.mapped.asr;
        std::cout << '\t' << res.mean_mapped_asr() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"femtool: embedding-mapping attack pipeline"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "generate a synthetic identity world");
    s_synth->add_option("--identities", synth.identities, "number of identities")
        ->capture_default_str();
    s_synth->add_option("--latent-dim", synth.latent_dim, "latent dimension")
        ->capture_default_str();
    s_synth->add_option("--sigma", synth.sigma, "intra-class view noise")
        ->capture_default_str();
    s_synth->add_option("--seed", synth.seed, "world seed")->capture_default_str();
    s_synth->add_option("--train-fraction", synth.train_fraction,
                        "identity split fraction")->capture_default_str();
    s_synth->add_option("--out", synth.out, "output world file")->required();

    ExtractArgs extract;
    auto* s_extract =
        app.add_subcommand("extract", "embed world views, or re-encode a dataset");
    s_extract->add_option("--world", extract.world_path, "world file (view mode)");
    s_extract->add_option("--in", extract.in_path, "embedding dataset (re-encode mode)");
    s_extract->add_option("--extractor-seed", extract.extractor_seed, "extractor seed")
        ->capture_default_str();
    s_extract->add_option("--dim", extract.dim, "embedding dimension")
        ->capture_default_str();
    s_extract->add_option("--hidden", extract.hidden, "extractor hidden width")
        ->capture_default_str();
    s_extract->add_option("--views", extract.views, "views per identity")
        ->capture_default_str();
    s_extract->add_option("--view-seed", extract.view_seed, "view noise seed")
        ->capture_default_str();
    s_extract->add_option("--out", extract.out, "output dataset")->required();

    ProtectArgs protect;
    auto* s_protect = app.add_subcommand("protect", "apply a protection scheme");
    s_protect->add_option("--scheme", protect.scheme, "polyprotect|mlphash|slerpface")
        ->capture_default_str();
    s_protect->add_option("--in", protect.in_path, "input dataset")->required();
    s_protect->add_option("--seed", protect.seed, "protection parameter seed")
        ->capture_default_str();
    s_protect->add_option("--t", protect.slerp_t, "slerp interpolation t")
        ->capture_default_str();
    s_protect->add_option("--out", protect.out, "output dataset")->required();

    TrainArgs train;
    auto* s_train = app.add_subcommand("train", "train a mapping network");
    s_train->add_option("--kind", train.kind, "kan|mlp")->capture_default_str();
    s_train->add_option("--pairs", train.pairs, "input dataset, target dataset")
        ->expected(2)
        ->required();
    s_train->add_option("--epochs", train.epochs, "training epochs")
        ->capture_default_str();
    s_train->add_option("--lr", train.lr, "initial learning rate")
        ->capture_default_str();
    s_train->add_option("--decay", train.decay, "per-epoch lr decay factor")
        ->capture_default_str();
    s_train->add_option("--batch", train.batch, "batch size")->capture_default_str();
    s_train->add_option("--weight-decay", train.weight_decay, "AdamW weight decay")
        ->capture_default_str();
    s_train->add_option("--seed", train.seed, "training seed")->capture_default_str();
    s_train->add_option("--hidden", train.hidden, "hidden width (0: target dim)")
        ->capture_default_str();
    s_train->add_option("--kan-grid", train.kan_grid, "KAN grid size")
        ->capture_default_str();
    s_train->add_option("--kan-order", train.kan_order, "KAN spline order")
        ->capture_default_str();
    s_train->add_option("--out", train.out, "checkpoint path")->required();
    s_train->add_option("--trace-out", train.trace_out, "loss trace path");

    MapArgs map_args;
    auto* s_map = app.add_subcommand("map", "map a dataset through a checkpoint");
    s_map->add_option("--ckpt", map_args.ckpt, "checkpoint path")->required();
    s_map->add_option("--in", map_args.in_path, "input dataset")->required();
    s_map->add_option("--out", map_args.out, "output dataset")->required();
    s_map->add_flag("--no-normalize", map_args.no_normalize,
                    "keep raw mapped vectors (skip unit normalization)");

    CalibrateArgs cal;
    auto* s_cal = app.add_subcommand("calibrate", "calibrate a verifier threshold");
    s_cal->add_option("--world", cal.world_path, "world file")->required();
    s_cal->add_option("--camera-seed", cal.camera_seed, "default extractor seed")
        ->capture_default_str();
    s_cal->add_option("--verifier-seed", cal.verifier_seed, "verifier encoder seed")
        ->capture_default_str();
    s_cal->add_option("--dim", cal.dim, "embedding dimension")->capture_default_str();
    s_cal->add_option("--hidden", cal.hidden, "network hidden width")
        ->capture_default_str();
    s_cal->add_option("--far", cal.far, "false-acceptance-rate target")
        ->capture_default_str();
    s_cal->add_option("--pairs", cal.pairs, "impostor pairs")->capture_default_str();
    s_cal->add_option("--seed", cal.seed, "calibration sampling seed")
        ->capture_default_str();
    s_cal->add_option("--out", cal.out, "calibration file")->required();

    EvalArgs eval;
    auto* s_eval = app.add_subcommand("eval", "score probes against enrollments");
    s_eval->add_option("--probes", eval.probes_path, "probe dataset")->required();
    s_eval->add_option("--enrolled", eval.enrolled_path, "enrolled dataset")->required();
    s_eval->add_option("--calibration", eval.calibration_path, "calibration file")
        ->required();
    s_eval->add_option("--out", eval.out, "report path (default stdout)");
    s_eval->add_flag("--no-scores", eval.no_scores, "omit the per-probe score table");

    GradcheckArgs gc;
    auto* s_gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    s_gc->add_option("--kind", gc.kind, "kan|mlp")->capture_default_str();
    s_gc->add_option("--dims", gc.dims, "comma-separated dims (in,hidden,out or full chain)")
        ->delimiter(',')
        ->capture_default_str();
    s_gc->add_option("--batch", gc.batch, "batch size")->capture_default_str();
    s_gc->add_option("--seed", gc.seed, "model/data seed")->capture_default_str();
    s_gc->add_option("--h", gc.h, "finite-difference step")->capture_default_str();

    std::string scenario_config;
    auto* s_scn = app.add_subcommand("scenario", "run a full scenario from a config");
    s_scn->add_option("--config", scenario_config, "scenario config file")->required();

    std::string sweep_config;
    std::vector<double> sweep_rhos = {0.9, 0.7, 0.5, 0.3, 0.1};
    auto* s_sweep = app.add_subcommand(
        "sweep-leakage", "train once, evaluate probes at each leakage rho");
    s_sweep->add_option("--config", sweep_config, "scenario config file")->required();
    s_sweep->add_option("--rhos", sweep_rhos, "leakage fractions")
        ->delimiter(',')
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: class=usage code=2 msg=\"" << e.what() << "\"\n";
        return 2;
    }

    try {
        if (*s_synth) return cmd_synth(synth);
        if (*s_extract) return cmd_extract(extract);
        if (*s_protect) return cmd_protect(protect);
        if (*s_train) return cmd_train(train);
        if (*s_map) return cmd_map(map_args);
        if (*s_cal) return cmd_calibrate(cal);
        if (*s_eval) return cmd_eval(eval);
        if (*s_gc) return cmd_gradcheck(gc);
        if (*s_scn) return cmd_scenario(scenario_config);
        if (*s_sweep) return cmd_sweep(sweep_config, sweep_rhos);
    } catch (const Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        std::cerr << "error: class=internal code=9 msg=\"" << e.what() << "\"\n";
        return 9;
    }
    return 2;
}
