// tscc: command-line driver for hybrid linear modeling experiments.
//
// Subcommands: generate, cluster, diagnose, incidence, reproduce.
// Exit codes: 0 success, 1 usage, 2 validation, 3 numerical, 4 I/O.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tscc/tscc.hpp"

using json = nlohmann::json;
using namespace tscc;

namespace {

constexpr std::uint64_t kThreeLinesSeed = 9;
constexpr std::uint64_t kTwoLinesSeed = 3;

std::string out_dir() {
    if (const char* env = std::getenv("TSCC_OUT_DIR")) return env;
    return ".";
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    os << text;
    if (!os) throw io_error("write failed: " + path);
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
    std::string text = "index,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        text += std::to_string(i + 1) + "," + std::to_string(labels[i] + 1) + "\n";
    write_text(path, text);
}

void write_eigenvalues_csv(const std::string& path, const Vector& values) {
    std::string text = "rank,eigenvalue\n";
    char buf[64];
    for (int i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g\n", i + 1, values(i));
        text += buf;
    }
    write_text(path, text);
}

void write_rows_csv(const std::string& path, const Matrix& rows,
                    const char prefix) {
    std::string text;
    for (int j = 0; j < rows.cols(); ++j) {
        if (j) text += ",";
        text += prefix;
        text += std::to_string(j + 1);
    }
    text += "\n";
    char buf[64];
    for (int i = 0; i < rows.rows(); ++i) {
        for (int j = 0; j < rows.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", rows(i, j));
            if (j) text += ",";
            text += buf;
        }
        text += "\n";
    }
    write_text(path, text);
}

TensorVariant parse_variant(const std::string& name) {
    if (name == "polar" || name == "polar_affine") return TensorVariant::polar_affine;
    if (name == "linear" || name == "polar_linear") return TensorVariant::polar_linear;
    if (name == "power" || name == "polar_power") return TensorVariant::polar_power;
    if (name == "perfect") return TensorVariant::perfect;
    throw validation_error("unknown variant '" + name + "'");
}

RowNorm parse_row_norm(const std::string& name) {
    if (name == "none") return RowNorm::none;
    if (name == "T") return RowNorm::T;
    if (name == "V") return RowNorm::V;
    throw validation_error("unknown row normalization '" + name + "'");
}

BoundExample parse_example(const std::string& name) {
    if (name == "orthogonal_lines_tscc") return BoundExample::orthogonal_lines_tscc;
    if (name == "angled_lines_tlscc") return BoundExample::angled_lines_tlscc;
    if (name == "rectangles_tlscc") return BoundExample::rectangles_tlscc;
    if (name == "half_disks_tlscc") return BoundExample::half_disks_tlscc;
    throw validation_error("unknown example '" + name + "'");
}

struct ClusterParams {
    std::string input;
    int d = 1;
    int k = 2;
    double sigma = 0.1;
    std::string variant = "polar";
    double q = 2.0;
    std::string row_norm = "none";
    bool unnormalized = false;
    int restarts = 20;
    std::uint64_t seed = 1;
    std::string labels_out, metrics_out, dump_weights;
    std::vector<double> sweep;
};

json run_cluster_once(const Dataset& ds, const ClusterParams& p, double sigma,
                      const std::string& labels_path,
                      const std::string& weights_path) {
    TsccOptions opts;
    opts.variant = parse_variant(p.variant);
    opts.q = p.q;
    opts.row_norm = parse_row_norm(p.row_norm);
    opts.unnormalized = p.unnormalized;
    opts.restarts = p.restarts;
    opts.seed = p.seed;

    const TsccResult res = run_tscc(ds, p.d, p.k, sigma, opts);
    write_labels_csv(labels_path, res.clustering.labels);
    if (!weights_path.empty())
        write_weight_csv(weights_path, res.weight, p.d, opts.variant, sigma);

    json metrics;
    metrics["schema"] = "tscc.metrics.v1";
    metrics["n"] = ds.size();
    metrics["dim"] = ds.dim();
    metrics["d"] = p.d;
    metrics["K"] = p.k;
    metrics["sigma"] = sigma;
    metrics["variant"] = variant_name(opts.variant);
    metrics["row_norm"] = p.row_norm;
    metrics["unnormalized"] = p.unnormalized;
    metrics["seed"] = p.seed;
    metrics["restarts_used"] = res.clustering.restarts_used;
    metrics["inertia"] = res.clustering.inertia;
    metrics["eigengap_collapse"] = res.embedding.eigengap_collapse;
    const int shown = std::min<int>(ds.size(), 2 * p.k + 5);
    metrics["eigenvalues"] = std::vector<double>(
        res.embedding.eigenvalues.data(),
        res.embedding.eigenvalues.data() + shown);
    if (ds.truth) {
        const auto mis = misclassification(res.clustering.labels,
                                           ds.truth->to_labels(), p.k);
        metrics["misclassified"] = mis.count;
        metrics["misclassification"] = mis.fraction;
    }
    return metrics;
}

int cmd_cluster(const ClusterParams& p) {
    const Dataset ds = read_dataset_csv(p.input);
    const std::string dir = out_dir();
    const std::string labels_path =
        p.labels_out.empty() ? join_path(dir, "labels.csv") : p.labels_out;
    const std::string metrics_path =
        p.metrics_out.empty() ? join_path(dir, "metrics.json") : p.metrics_out;

    if (p.sweep.empty()) {
        const json metrics =
            run_cluster_once(ds, p, p.sigma, labels_path, p.dump_weights);
        write_json(metrics_path, metrics);
        std::cout << metrics.dump(2) << "\n";
        return 0;
    }

    // parameter sweep: one isolated run per sigma on a small worker pool
    auto stem = [](const std::string& path, int i) {
        std::filesystem::path fp(path);
        return (fp.parent_path() /
                (fp.stem().string() + "_s" + std::to_string(i) +
                 fp.extension().string()))
            .string();
    };
    std::vector<std::future<json>> futures;
    for (std::size_t i = 0; i < p.sweep.size(); ++i)
        futures.push_back(std::async(std::launch::async, [&, i] {
            return run_cluster_once(ds, p, p.sweep[i],
                                    stem(labels_path, static_cast<int>(i)),
                                    p.dump_weights.empty()
                                        ? std::string()
                                        : stem(p.dump_weights, static_cast<int>(i)));
        }));
    json all = json::array();
    for (auto& f : futures) all.push_back(f.get());
    write_json(metrics_path, all);
    std::cout << all.dump(2) << "\n";
    return 0;
}

json diagnostics_report(const Dataset& ds, int d, int k, double sigma,
                        TensorVariant variant, bool unnormalized,
                        std::uint64_t seed) {
    if (!ds.truth)
        throw validation_error("diagnose: input dataset must carry labels");
    const Partition& truth = *ds.truth;
    if (truth.blocks() != k)
        throw validation_error("diagnose: K does not match the labels");

    TsccOptions opts;
    opts.variant = variant;
    opts.unnormalized = unnormalized;
    opts.seed = seed;
    const TsccResult res = run_tscc(ds, d, k, sigma, opts);

    const Matrix& u = res.embedding.U;
    const Matrix perfect_u = perfect_embedding(truth);
    const double tv = total_variation(u, truth);
    const double dist = subspace_distance(u, perfect_u);
    const Vector angles = principal_angles(u, perfect_u);

    Vector perfect_deg(ds.size());
    const auto labels = truth.to_labels();
    const auto sizes = truth.sizes();
    for (int i = 0; i < ds.size(); ++i)
        perfect_deg(i) = perfect_degree(sizes[labels[i]], d);
    const BoundConstants bc =
        bound_constants(k, d, sizes, res.weight.degrees, perfect_deg);

    TensorSpec spec;
    spec.variant = variant;
    spec.sigma = sigma;
    spec.d = d;
    if (variant == TensorVariant::perfect) spec.ground_truth = labels;
    const Deviation dev = deviation_norm(spec, ds.points, labels);

    PerturbationRun run;
    run.normalized_deviation_sq = dev.normalized_sq;
    run.tv = tv;
    run.unnormalized = unnormalized;
    run.n = ds.size();
    run.k = k;
    run.d = d;
    const PerturbationCheck check = check_perturbation_bound(run, bc);

    json rep;
    rep["schema"] = "tscc.diagnostics.v1";
    rep["n"] = ds.size();
    rep["d"] = d;
    rep["K"] = k;
    rep["sigma"] = sigma;
    rep["variant"] = variant_name(variant);
    rep["unnormalized"] = unnormalized;
    rep["tv"] = tv;
    rep["subspace_distance"] = dist;
    rep["principal_angles"] =
        std::vector<double>(angles.data(), angles.data() + angles.size());
    rep["beta_u"] = separation_factor(u, truth);
    rep["beta_t"] = separation_factor(row_normalize_T(u, truth), truth);
    rep["beta_v"] = separation_factor(row_normalize_V(u), truth);
    if (k == 2) {
        rep["e_id_u"] = identification_error(u, truth);
        rep["e_id_t"] = identification_error(row_normalize_T(u, truth), truth);
        rep["e_id_v"] = identification_error(row_normalize_V(u), truth);
    }
    rep["eigenvalues"] = std::vector<double>(
        res.embedding.eigenvalues.data(),
        res.embedding.eigenvalues.data() +
            std::min<int>(ds.size(), 2 * k + 5));
    rep["eigengap_collapse"] = res.embedding.eigengap_collapse;

    json constants;
    constants["epsilon1"] = bc.epsilon1_valid ? json(bc.epsilon1) : json();
    constants["epsilon1_valid"] = bc.epsilon1_valid;
    constants["epsilon2"] = bc.epsilon2;
    constants["C0"] = bc.C0;
    constants["C1"] = bc.C1;
    constants["C2"] = bc.C2;
    constants["delta_K"] = bc.delta_K;
    rep["bound_constants"] = constants;

    json theorem;
    theorem["x"] = check.x;
    theorem["threshold"] = check.threshold;
    theorem["hypothesis_met"] = check.hypothesis_met;
    theorem["bound_value"] = check.bound_value;
    theorem["bound_holds"] = check.hypothesis_met ? json(check.bound_holds)
                                                  : json();
    theorem["deviation_frobenius"] = dev.frobenius;
    rep["perturbation_check"] = theorem;

    const auto mis =
        misclassification(res.clustering.labels, labels, k);
    rep["misclassified"] = mis.count;
    rep["misclassification"] = mis.fraction;
    return rep;
}

int cmd_generate(const std::string& model_name, const std::string& config,
                 int points, double noise, std::uint64_t seed,
                 const std::string& out, const std::vector<int>& sizes) {
    MixtureModel model;
    if (!config.empty()) {
        model = parse_model_config(config);
    } else if (model_name == "three_lines") {
        model = three_lines_model(points, noise, seed);
    } else if (model_name == "two_lines") {
        std::vector<int> sz = sizes.empty() ? std::vector<int>{20, 80} : sizes;
        if (sz.size() != 2)
            throw validation_error("two_lines expects two sizes");
        model = random_lines_model(2, points, noise, seed, &sz);
    } else {
        throw validation_error("unknown model '" + model_name +
                               "' (try three_lines, two_lines or --config)");
    }
    if (!sizes.empty() && config.empty() && model_name == "three_lines") {
        if (sizes.size() != model.components.size())
            throw validation_error("--sizes length does not match the model");
        for (std::size_t i = 0; i < sizes.size(); ++i)
            model.components[i].size = sizes[i];
    }
    const Dataset ds = sample_mixture(model);
    const std::string path =
        out.empty() ? join_path(out_dir(), "dataset.csv") : out;
    write_dataset_csv(path, ds);
    std::cout << "wrote " << path << " (" << ds.size() << " points)\n";
    return 0;
}

int cmd_incidence(const std::string& example_name, double L, double theta,
                  double omega, double sigma, std::int64_t samples,
                  std::uint64_t seed, const std::string& out) {
    const BoundExample example = parse_example(example_name);
    BoundParams params;
    params.L = L;
    params.theta = theta;
    params.omega = omega;
    params.sigma = sigma;
    const double bound = analytic_bound(example, params);
    const ExampleConfig cfg = example_config(example, params);
    const MomentEstimate est = mc_incidence_constant(
        cfg.measures, cfg.d, sigma, cfg.linear, samples, seed);

    json rec;
    rec["schema"] = "tscc.incidence.v1";
    rec["kind"] = "incidence";
    rec["example"] = example_name;
    rec["params"] = {{"L", L}, {"theta", theta}, {"omega", omega},
                     {"sigma", sigma}};
    rec["value"] = est.value;
    rec["std_error"] = est.std_error;
    rec["samples"] = est.samples;
    rec["bound"] = bound;
    rec["within_bound"] = est.value <= bound + 3.0 * est.std_error;
    const std::string path =
        out.empty() ? join_path(out_dir(), "incidence.json") : out;
    write_json(path, rec);
    std::cout << rec.dump(2) << "\n";
    return 0;
}

int reproduce_lines_scenario(bool noisy, const std::string& dir) {
    const double noise = noisy ? 0.025 : 0.0;
    const double sigma = noisy ? 0.1840 : 1e-5;
    const MixtureModel model = three_lines_model(25, noise, kThreeLinesSeed);
    const Dataset ds = sample_mixture(model);
    write_dataset_csv(join_path(dir, noisy ? "fig2_data.csv" : "fig1_data.csv"),
                      ds);

    TsccOptions opts;
    opts.seed = 1;
    const TsccResult res = run_tscc(ds, 1, 3, sigma, opts);
    const std::string tag = noisy ? "fig2" : "fig1";
    write_eigenvalues_csv(join_path(dir, tag + "_eigenvalues.csv"),
                          res.embedding.eigenvalues);
    write_rows_csv(join_path(dir, tag + "_embedding.csv"), res.embedding.U, 'u');
    write_labels_csv(join_path(dir, tag + "_labels.csv"),
                     res.clustering.labels);
    const json rep = diagnostics_report(ds, 1, 3, sigma,
                                        TensorVariant::polar_affine, false, 1);
    write_json(join_path(dir, tag + "_diagnostics.json"), rep);
    std::cout << tag << ": misclassified " << rep["misclassified"] << " of "
              << ds.size() << "\n";
    return 0;
}

int reproduce_utv(const std::string& dir) {
    std::vector<int> sizes{20, 80};
    MixtureModel model = random_lines_model(2, 0, 0.025, kTwoLinesSeed, &sizes);
    const Dataset ds = sample_mixture(model);
    TsccOptions opts;
    opts.seed = 1;
    const TsccResult res = run_tscc(ds, 1, 2, 0.1840, opts);
    const Partition& truth = *ds.truth;
    const Matrix& u = res.embedding.U;
    const Matrix t = row_normalize_T(u, truth);
    const Matrix v = row_normalize_V(u);
    write_rows_csv(join_path(dir, "utv_rows_u.csv"), u, 'u');
    write_rows_csv(join_path(dir, "utv_rows_t.csv"), t, 't');
    write_rows_csv(join_path(dir, "utv_rows_v.csv"), v, 'v');

    json rec;
    rec["schema"] = "tscc.utv.v1";
    rec["beta_u"] = separation_factor(u, truth);
    rec["beta_t"] = separation_factor(t, truth);
    rec["beta_v"] = separation_factor(v, truth);
    rec["ordering_holds"] =
        rec["beta_u"].get<double>() <= rec["beta_t"].get<double>() &&
        rec["beta_t"].get<double>() <= rec["beta_v"].get<double>();
    rec["e_id_u"] = identification_error(u, truth);
    rec["e_id_t"] = identification_error(t, truth);
    rec["e_id_v"] = identification_error(v, truth);
    write_json(join_path(dir, "utv_betas.json"), rec);
    std::cout << "utv: beta(U)=" << rec["beta_u"] << " beta(T)=" << rec["beta_t"]
              << " beta(V)=" << rec["beta_v"] << "\n";
    return 0;
}

int reproduce_example_table(BoundExample example, const std::string& name,
                            const std::string& dir) {
    std::string csv = "sigma,estimate,std_error,bound,within_bound\n";
    json rows = json::array();
    for (double sigma : {0.05, 0.1, 0.2}) {
        BoundParams params;
        params.L = 1.0;
        params.theta = M_PI / 6.0;
        params.omega = 20.0;
        params.sigma = sigma;
        const ExampleConfig cfg = example_config(example, params);
        const MomentEstimate est = mc_incidence_constant(
            cfg.measures, cfg.d, sigma, cfg.linear, 100000, 12345);
        const double bound = analytic_bound(example, params);
        const bool ok = est.value <= bound + 3.0 * est.std_error;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%g,%.8g,%.3g,%.8g,%d\n", sigma,
                      est.value, est.std_error, bound, ok ? 1 : 0);
        csv += buf;
        rows.push_back({{"sigma", sigma},
                        {"estimate", est.value},
                        {"std_error", est.std_error},
                        {"bound", bound},
                        {"within_bound", ok}});
    }
    write_text(join_path(dir, name + "_table.csv"), csv);
    write_json(join_path(dir, name + "_table.json"),
               json{{"schema", "tscc.example_table.v1"},
                    {"example", name},
                    {"rows", rows}});
    std::cout << name << ": wrote estimate-vs-bound table\n";
    return 0;
}

int reproduce_spectra(const std::string& dir) {
    std::string csv = "K,d,sizes,mode,max_abs_error\n";
    double worst = 0.0;
    for (int d = 0; d <= 2; ++d)
        for (int k = 1; k <= 3; ++k) {
            std::vector<int> sizes;
            for (int j = 0; j < k; ++j) sizes.push_back(d + 3 + 2 * j);
            const WeightMatrix w = perfect_weight_matrix(sizes, d);
            for (auto mode :
                 {SpectrumMode::normalized, SpectrumMode::unnormalized}) {
                const Matrix z = mode == SpectrumMode::normalized
                                     ? normalize_symmetric(w)
                                     : w.entries;
                Eigen::SelfAdjointEigenSolver<Matrix> es(z);
                const PerfectSpectrum ps = perfect_spectrum(sizes, d, mode);
                double err = 0.0;
                const int n = static_cast<int>(ps.eigenvalues.size());
                for (int i = 0; i < n; ++i)
                    err = std::max(err,
                                   std::abs(es.eigenvalues()(n - 1 - i) -
                                            ps.eigenvalues(i)));
                worst = std::max(worst, err);
                std::string size_str;
                for (int s : sizes)
                    size_str += (size_str.empty() ? "" : "|") + std::to_string(s);
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%d,%d,%s,%s,%.3e\n", k, d,
                              size_str.c_str(),
                              mode == SpectrumMode::normalized ? "normalized"
                                                               : "unnormalized",
                              err);
                csv += buf;
            }
        }
    write_text(join_path(dir, "spectra.csv"), csv);
    json note;
    note["schema"] = "tscc.spectra.v1";
    note["max_abs_error"] = worst;
    note["unnormalized_multiplicities"] =
        "top value d~_k once per cluster; bulk value nu~_k = (d+1) P(N_k-2, d) "
        "with multiplicity N_k - 1 (the multiplicity that makes the trace "
        "identity hold)";
    write_json(join_path(dir, "spectra.json"), note);
    std::cout << "spectra: max |closed form - dense| = " << worst << "\n";
    return 0;
}

int cmd_reproduce(const std::string& scenario, const std::string& dir_arg) {
    const std::string dir = dir_arg.empty() ? out_dir() : dir_arg;
    std::filesystem::create_directories(dir);
    if (scenario == "fig1") return reproduce_lines_scenario(false, dir);
    if (scenario == "fig2") return reproduce_lines_scenario(true, dir);
    if (scenario == "utv") return reproduce_utv(dir);
    if (scenario == "ex51")
        return reproduce_example_table(BoundExample::orthogonal_lines_tscc,
                                       "ex51", dir);
    if (scenario == "ex52")
        return reproduce_example_table(BoundExample::angled_lines_tlscc, "ex52",
                                       dir);
    if (scenario == "ex53")
        return reproduce_example_table(BoundExample::rectangles_tlscc, "ex53",
                                       dir);
    if (scenario == "ex54")
        return reproduce_example_table(BoundExample::half_disks_tlscc, "ex54",
                                       dir);
    if (scenario == "spectra") return reproduce_spectra(dir);
    throw validation_error("unknown scenario '" + scenario + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Theoretical spectral curvature clustering toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Sample a hybrid linear model");
    std::string gen_model = "three_lines", gen_config, gen_out;
    int gen_points = 25;
    double gen_noise = 0.0;
    std::uint64_t gen_seed = 7;
    std::vector<int> gen_sizes;
    gen->add_option("--model", gen_model, "three_lines or two_lines");
    gen->add_option("--config", gen_config, "model config file");
    gen->add_option("--points", gen_points, "points per flat");
    gen->add_option("--noise", gen_noise, "orthogonal noise fraction");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--sizes", gen_sizes, "per-cluster point counts")
        ->delimiter(',');
    gen->add_option("--out", gen_out, "output CSV path");

    // cluster
    auto* clu = app.add_subcommand("cluster", "Run TSCC on a dataset CSV");
    ClusterParams cp;
    clu->add_option("--input", cp.input, "dataset CSV")->required();
    clu->add_option("--d", cp.d, "intrinsic dimension")->required();
    clu->add_option("--K", cp.k, "number of clusters")->required();
    clu->add_option("--sigma", cp.sigma, "tuning parameter")->required();
    clu->add_option("--variant", cp.variant, "polar|linear|power|perfect");
    clu->add_option("--q", cp.q, "curvature exponent for power variant");
    clu->add_option("--row-norm", cp.row_norm, "none|T|V");
    clu->add_flag("--unnormalized", cp.unnormalized, "skip degree normalization");
    clu->add_option("--restarts", cp.restarts, "k-means restarts");
    clu->add_option("--seed", cp.seed, "k-means seed");
    clu->add_option("--labels-out", cp.labels_out, "labels CSV path");
    clu->add_option("--metrics-out", cp.metrics_out, "metrics JSON path");
    clu->add_option("--dump-weights", cp.dump_weights, "weight matrix CSV path");
    clu->add_option("--sweep-sigma", cp.sweep, "sweep sigma values")
        ->delimiter(',');

    // diagnose
    auto* dia = app.add_subcommand("diagnose", "Goodness-of-clustering report");
    std::string dia_input, dia_variant = "polar", dia_out;
    int dia_d = 1, dia_k = 2;
    double dia_sigma = 0.1;
    bool dia_un = false;
    std::uint64_t dia_seed = 1;
    dia->add_option("--input", dia_input, "dataset CSV with labels")->required();
    dia->add_option("--d", dia_d, "intrinsic dimension")->required();
    dia->add_option("--K", dia_k, "number of clusters")->required();
    dia->add_option("--sigma", dia_sigma, "tuning parameter")->required();
    dia->add_option("--variant", dia_variant, "polar|linear|power|perfect");
    dia->add_flag("--unnormalized", dia_un, "skip degree normalization");
    dia->add_option("--seed", dia_seed, "k-means seed");
    dia->add_option("--out", dia_out, "report JSON path");

    // incidence
    auto* inc = app.add_subcommand("incidence",
                                   "Monte Carlo incidence constant vs bound");
    std::string inc_example, inc_out;
    double inc_L = 1.0, inc_theta = M_PI / 2.0, inc_omega = 20.0,
           inc_sigma = 0.1;
    std::int64_t inc_samples = 100000;
    std::uint64_t inc_seed = 1;
    inc->add_option("--example", inc_example,
                    "orthogonal_lines_tscc|angled_lines_tlscc|"
                    "rectangles_tlscc|half_disks_tlscc")
        ->required();
    inc->add_option("--L", inc_L, "segment length");
    inc->add_option("--theta", inc_theta, "angle between the lines");
    inc->add_option("--omega", inc_omega, "strip aspect ratio L/eps");
    inc->add_option("--sigma", inc_sigma, "tuning parameter")->required();
    inc->add_option("--samples", inc_samples, "Monte Carlo sample count");
    inc->add_option("--seed", inc_seed, "random seed");
    inc->add_option("--out", inc_out, "output JSON path");

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "Fixed-seed scenario runs");
    std::string rep_scenario, rep_dir;
    rep->add_option("--scenario", rep_scenario,
                    "fig1|fig2|utv|ex51|ex52|ex53|ex54|spectra")
        ->required();
    rep->add_option("--out-dir", rep_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed())
            return cmd_generate(gen_model, gen_config, gen_points, gen_noise,
                                gen_seed, gen_out, gen_sizes);
        if (clu->parsed()) return cmd_cluster(cp);
        if (dia->parsed()) {
            const Dataset ds = read_dataset_csv(dia_input);
            const json report =
                diagnostics_report(ds, dia_d, dia_k, dia_sigma,
                                   parse_variant(dia_variant), dia_un, dia_seed);
            const std::string path = dia_out.empty()
                                         ? join_path(out_dir(), "diagnostics.json")
                                         : dia_out;
            write_json(path, report);
            std::cout << report.dump(2) << "\n";
            return 0;
        }
        if (inc->parsed())
            return cmd_incidence(inc_example, inc_L, inc_theta, inc_omega,
                                 inc_sigma, inc_samples, inc_seed, inc_out);
        if (rep->parsed()) return cmd_reproduce(rep_scenario, rep_dir);
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
