// crmsbm: generate networks, fit block models, score link predictions and
// run the sampler validation harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "crmsbm/baselines.hpp"
#include "crmsbm/data.hpp"
#include "crmsbm/error.hpp"
#include "crmsbm/eval.hpp"
#include "crmsbm/generate.hpp"
#include "crmsbm/output.hpp"
#include "crmsbm/sampler.hpp"
#include "crmsbm/validate.hpp"

namespace fs = std::filesystem;
using namespace crmsbm;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 3;

std::string default_out_dir() {
    const char* env = std::getenv("CRMSBM_OUT_DIR");
    return env && *env ? env : ".";
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_manifest(const CLI::App& cmd, const fs::path& path) {
    open_out(path) << cmd.config_to_str(true, false);
}

Rng seeded(std::uint64_t seed, int stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

struct GenerateArgs {
    int K = 1;
    double alpha = 20.0, sigma = 0.5, tau = 1.0;
    double beta0 = 1.0, lambda_a = 1.0, lambda_b = 1.0;
    double truncation = 0.0;
    double eta = -1.0;
    std::uint64_t seed = 1;
    std::string out_dir = default_out_dir();
    std::string prefix = "network";
};

int run_generate(const CLI::App& cmd, const GenerateArgs& a) {
    Rng rng(a.seed);
    NetworkOptions opts;
    opts.truncation = a.truncation;
    if (a.eta >= 0.0) opts.eta_override = a.eta;
    const GeneratedNetwork net =
        sample_network(a.K, GgpParams(a.alpha, a.sigma, a.tau), a.beta0, a.lambda_a, a.lambda_b, rng, opts);
    const fs::path base = fs::path(a.out_dir) / a.prefix;
    {
        auto out = open_out(base.string() + ".edges");
        write_network_edge_list(out, net);
    }
    nlohmann::json side = network_sidecar(net);
    side["params"] = {{"alpha", a.alpha}, {"sigma", a.sigma}, {"tau", a.tau}, {"beta0", a.beta0},
                      {"lambda_a", a.lambda_a}, {"lambda_b", a.lambda_b}, {"seed", a.seed}};
    open_out(base.string() + ".json") << side.dump(1) << '\n';
    write_manifest(cmd, base.string() + ".config.ini");
    std::cout << "generated " << net.num_vertices() << " vertices, " << net.num_edges() << " edges -> "
              << base.string() << ".edges\n";
    return 0;
}

struct FitArgs {
    std::string input;
    std::string model = "crmsbm";
    int K = 1;
    long iterations = 2000;
    long burn_in = -1;
    int mh_steps = 150;
    double step_size = 0.1;
    double holdout = 0.0;
    bool holdout_self_pairs = false;
    bool symmetrize = false;
    bool drop_self_edges = false;
    bool keep_counts = false;
    bool clip_held_out = false;
    long label_stride = 0;
    int chains = 1;
    std::uint64_t seed = 1;
    std::string out_dir = default_out_dir();
    std::string prefix = "fit";
};

struct ChainOutput {
    std::vector<Prediction> predictions;
    nlohmann::json summary;
};

ChainOutput fit_one(const FitArgs& a, const EdgeCountMatrix& A, const fs::path& base, Rng& rng) {
    ChainOutput result;
    if (a.model == "crmsbm" || a.model == "crm") {
        McmcConfig cfg;
        cfg.K = a.model == "crm" ? 1 : a.K;
        cfg.unit_interaction = a.model == "crm";
        cfg.iterations = a.iterations;
        cfg.burn_in = a.burn_in;
        cfg.mh_steps = a.mh_steps;
        cfg.step_size = a.step_size;
        cfg.clip_held_out = a.clip_held_out;
        cfg.label_stride = a.label_stride;
        const Chain chain = run_mcmc(A, cfg, rng);
        {
            auto file = open_out(base.string() + ".trace.csv");
            write_trace_csv(file, chain.trace, cfg.K);
        }
        if (a.label_stride > 0) {
            auto file = open_out(base.string() + ".labels.csv");
            write_label_snapshots(file, chain.label_snapshots);
        }
        result.predictions = chain.predictions;
        std::vector<int> mode = chain.mode_labels();
        for (int& l : mode) ++l;
        result.summary = {{"model", a.model},
                          {"K", cfg.K},
                          {"iterations", a.iterations},
                          {"mode_labels", mode},
                          {"final_sigma", chain.final_measure.sigma},
                          {"final_tau", chain.final_measure.tau}};
    } else {
        BaselineConfig cfg;
        cfg.degree_corrected = a.model == "dcsbm";
        cfg.initial_K = a.K;
        cfg.iterations = a.iterations;
        cfg.burn_in = a.burn_in;
        cfg.mh_steps = a.mh_steps;
        cfg.step_size = a.step_size;
        cfg.clip_held_out = a.clip_held_out;
        cfg.label_stride = a.label_stride;
        const BaselineChain chain = dcsbm_gibbs(A, cfg, rng);
        {
            auto file = open_out(base.string() + ".trace.csv");
            write_baseline_trace_csv(file, chain.trace);
        }
        if (a.label_stride > 0) {
            auto file = open_out(base.string() + ".labels.csv");
            write_label_snapshots(file, chain.label_snapshots);
        }
        result.predictions = chain.predictions;
        std::vector<int> labels = chain.final_state.labels;
        for (int& l : labels) ++l;
        result.summary = {{"model", a.model},
                          {"K", chain.final_state.K},
                          {"iterations", a.iterations},
                          {"final_labels", labels}};
    }
    {
        auto file = open_out(base.string() + ".predictions.csv");
        write_predictions_csv(file, result.predictions);
    }
    return result;
}

int run_fit(const CLI::App& cmd, const FitArgs& a) {
    PreprocessOptions pre;
    pre.symmetrize = a.symmetrize;
    pre.drop_self_edges = a.drop_self_edges;
    pre.binarize = !a.keep_counts;
    const Dataset data = preprocess(load_edge_list(a.input), pre);

    const fs::path base = fs::path(a.out_dir) / a.prefix;
    Rng split_rng = seeded(a.seed, 0);
    HoldoutOptions hopts;
    hopts.include_self_pairs = a.holdout_self_pairs;
    HoldoutSplit split{data.matrix, {}};
    if (a.holdout > 0.0) split = make_holdout(data.matrix, a.holdout, split_rng, hopts);
    {
        auto file = open_out(base.string() + ".holdout.csv");
        write_holdout_manifest(file, split.truth);
    }
    {
        auto out = open_out(base.string() + ".vertices.csv");
        out << "index,label\n";
        for (std::size_t v = 0; v < data.labels.size(); ++v) out << v + 1 << ',' << data.labels[v] << '\n';
    }
    write_manifest(cmd, base.string() + ".config.ini");

    std::vector<ChainOutput> outputs(static_cast<std::size_t>(a.chains));
    std::vector<std::string> errors(static_cast<std::size_t>(a.chains));
    auto work = [&](int c) {
        try {
            Rng rng = seeded(a.seed, c + 1);
            const fs::path chain_base =
                a.chains == 1 ? base : fs::path(base.string() + ".chain" + std::to_string(c + 1));
            outputs[static_cast<std::size_t>(c)] = fit_one(a, split.observed, chain_base, rng);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(c)] = e.what();
        }
    };
    if (a.chains == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int c = 0; c < a.chains; ++c) pool.emplace_back(work, c);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);

    nlohmann::json summary = {{"vertices", data.matrix.n_vertices()},
                              {"edges", data.matrix.total_count()},
                              {"held_out", split.truth.size()},
                              {"chains", nlohmann::json::array()}};
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        nlohmann::json s = outputs[c].summary;
        bool both = false, pos = false;
        for (const auto& d : split.truth) (d.label ? pos : both) = true;
        if (pos && both) s["auc"] = score_predictions(outputs[c].predictions, split.truth).auc;
        summary["chains"].push_back(s);
    }
    open_out(base.string() + ".summary.json") << summary.dump(1) << '\n';
    std::cout << "fit " << a.model << " on " << data.matrix.n_vertices() << " vertices";
    for (const auto& s : summary["chains"])
        if (s.contains("auc")) std::cout << ", AUC " << s["auc"].get<double>();
    std::cout << " -> " << base.string() << ".*\n";
    return 0;
}

struct PredictArgs {
    std::string predictions, holdout, out;
};

int run_predict(const PredictArgs& a) {
    std::ifstream pin(a.predictions), hin(a.holdout);
    if (!pin) throw std::runtime_error("cannot open " + a.predictions);
    if (!hin) throw std::runtime_error("cannot open " + a.holdout);
    const LinkMetrics m = score_predictions(read_predictions_csv(pin), read_holdout_manifest(hin));
    const std::string text = to_json(m).dump(1);
    if (!a.out.empty()) open_out(a.out) << text << '\n';
    std::cout << text << '\n';
    return 0;
}

struct ValidateArgs {
    double alpha = 2.0, sigma = 0.5, tau = 1.0;
    long networks = 100000;
    long samples = 100000;
    int max_edges = 4;
    double truncation = 0.0;
    int threads = 1;
    double z_max = 4.0;
    double ks_max = 0.01;
    std::uint64_t seed = 1;
    std::string out_dir = default_out_dir();
    std::string prefix = "validate";
};

int run_validate(const CLI::App& cmd, const ValidateArgs& a) {
    const GgpParams p(a.alpha, a.sigma, a.tau);
    SimulationOptions sim;
    sim.truncation = a.truncation;
    sim.threads = a.threads;
    Rng rng(a.seed);
    const SignatureReport report = validate_signatures(p, a.networks, a.max_edges, rng, sim);
    const double ks = validate_total_mass(p, a.samples, rng, sim);

    const fs::path base = fs::path(a.out_dir) / a.prefix;
    {
        auto file = open_out(base.string() + ".signatures.csv");
        write_signature_csv(file, report);
    }
    write_signature_csv(std::cout, report);
    const bool ok = report.max_abs_z < a.z_max && ks < a.ks_max;
    const nlohmann::json summary = {{"max_abs_z", report.max_abs_z},
                                    {"total_variation", report.total_variation},
                                    {"edge_count_mismatch", report.max_edge_count_mismatch},
                                    {"ks", ks},
                                    {"networks", a.networks},
                                    {"samples", a.samples},
                                    {"pass", ok}};
    open_out(base.string() + ".summary.json") << summary.dump(1) << '\n';
    write_manifest(cmd, base.string() + ".config.ini");
    std::cout << "max |z| = " << report.max_abs_z << ", TV = " << report.total_variation << ", KS = " << ks
              << (ok ? "  PASS\n" : "  FAIL\n");
    return ok ? 0 : kExitValidation;
}

struct AcfArgs {
    std::string trace, column = "alpha_1", out;
    int max_lag = 1000;
    long burn_in = 0;
};

int run_acf(const AcfArgs& a) {
    std::ifstream in(a.trace);
    if (!in) throw std::runtime_error("cannot open " + a.trace);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) header.push_back(f);
    }
    const auto col = std::find(header.begin(), header.end(), a.column);
    if (col == header.end()) throw std::runtime_error("no column " + a.column + " in " + a.trace);
    const auto idx = static_cast<std::size_t>(col - header.begin());
    std::vector<double> series;
    long row = 0;
    while (std::getline(in, line)) {
        if (row++ < a.burn_in) continue;
        std::stringstream ss(line);
        std::string f;
        for (std::size_t k = 0; k <= idx; ++k) std::getline(ss, f, ',');
        series.push_back(std::stod(f));
    }
    const auto acf = autocorrelation(series, a.max_lag);
    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "lag,acf\n";
    for (std::size_t k = 0; k < acf.size(); ++k) out << k << ',' << acf[k] << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-structured completely random measure network models"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Simulate a network and write its edge list and ground truth");
    g->set_config("--config", "", "key=value configuration file");
    g->add_option("--K", gen.K, "Number of blocks")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--alpha", gen.alpha, "Location window measure")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--sigma", gen.sigma, "GGP discount in (0,1)")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    g->add_option("--tau", gen.tau, "GGP tilt")->check(CLI::NonNegativeNumber)->capture_default_str();
    g->add_option("--beta0", gen.beta0, "Block proportion concentration")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--lambda-a", gen.lambda_a, "Interaction Gamma shape")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--lambda-b", gen.lambda_b, "Interaction Gamma rate")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--truncation", gen.truncation, "Atom weight threshold (0: 1e-6 of E[T])")->capture_default_str();
    g->add_option("--eta", gen.eta, "Fix every interaction rate (negative: sample)")->capture_default_str();
    g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    g->add_option("--out-dir", gen.out_dir, "Output directory (default $CRMSBM_OUT_DIR or .)")->capture_default_str();
    g->add_option("--prefix", gen.prefix, "Output file prefix")->capture_default_str();

    FitArgs fit, base;
    base.model = "dcsbm";
    auto add_fit_options = [](CLI::App* f, FitArgs& fit) {
        f->set_config("--config", "", "key=value configuration file");
        f->add_option("--input", fit.input, "Edge list file")->required()->check(CLI::ExistingFile);
        f->add_option("--model", fit.model, "crmsbm, crm, pirm or dcsbm")
            ->check(CLI::IsMember({"crmsbm", "crm", "pirm", "dcsbm"}))
            ->capture_default_str();
        f->add_option("--K", fit.K, "Blocks (initial blocks for pirm/dcsbm)")->check(CLI::PositiveNumber)->capture_default_str();
        f->add_option("--iters", fit.iterations, "MCMC iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
        f->add_option("--burn-in", fit.burn_in, "Burn-in iterations (negative: half)")->capture_default_str();
        f->add_option("--mh-steps", fit.mh_steps, "MH passes per iteration")->check(CLI::PositiveNumber)->capture_default_str();
        f->add_option("--step-size", fit.step_size, "MH proposal standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
        f->add_option("--holdout", fit.holdout, "Fraction of dyads held out")->check(CLI::Range(0.0, 0.999))->capture_default_str();
        f->add_flag("--holdout-self-pairs", fit.holdout_self_pairs, "Include (i,i) in the holdout pool");
        f->add_flag("--symmetrize", fit.symmetrize, "Treat the network as undirected");
        f->add_flag("--drop-self-edges", fit.drop_self_edges, "Remove self-edges");
        f->add_flag("--keep-counts", fit.keep_counts, "Do not threshold counts to binary");
        f->add_flag("--clip-held-out", fit.clip_held_out, "Impute held-out entries as indicators");
        f->add_option("--label-stride", fit.label_stride, "Write labels every N iterations (0: never)")->capture_default_str();
        f->add_option("--chains", fit.chains, "Independent chains run concurrently")->check(CLI::PositiveNumber)->capture_default_str();
        f->add_option("--seed", fit.seed, "RNG seed")->capture_default_str();
        f->add_option("--out-dir", fit.out_dir, "Output directory (default $CRMSBM_OUT_DIR or .)")->capture_default_str();
        f->add_option("--prefix", fit.prefix, "Output file prefix")->capture_default_str();
    };
    auto* f = app.add_subcommand("fit", "Fit a model by MCMC, optionally with held-out dyads");
    add_fit_options(f, fit);
    auto* b = app.add_subcommand("baseline", "Fit the pirm or dcsbm baseline (same options as fit)");
    add_fit_options(b, base);

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "Score a prediction file against a holdout manifest");
    p->add_option("--predictions", pred.predictions, "CSV i,j,score")->required()->check(CLI::ExistingFile);
    p->add_option("--holdout", pred.holdout, "CSV i,j,true_label")->required()->check(CLI::ExistingFile);
    p->add_option("--out", pred.out, "Metrics JSON file");

    ValidateArgs val;
    auto* v = app.add_subcommand("validate", "Compare forward simulations with exact single-block probabilities");
    v->set_config("--config", "", "key=value configuration file");
    v->add_option("--alpha", val.alpha)->check(CLI::PositiveNumber)->capture_default_str();
    v->add_option("--sigma", val.sigma)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    v->add_option("--tau", val.tau)->check(CLI::NonNegativeNumber)->capture_default_str();
    v->add_option("--networks", val.networks, "Simulated networks")->check(CLI::PositiveNumber)->capture_default_str();
    v->add_option("--samples", val.samples, "Simulated total masses")->check(CLI::PositiveNumber)->capture_default_str();
    v->add_option("--max-edges", val.max_edges, "Largest edge count tabulated")->check(CLI::NonNegativeNumber)->capture_default_str();
    v->add_option("--truncation", val.truncation, "Atom weight threshold (0: default)")->capture_default_str();
    v->add_option("--threads", val.threads)->check(CLI::PositiveNumber)->capture_default_str();
    v->add_option("--z-max", val.z_max, "Largest tolerated |z|")->capture_default_str();
    v->add_option("--ks-max", val.ks_max, "Largest tolerated KS distance")->capture_default_str();
    v->add_option("--seed", val.seed)->capture_default_str();
    v->add_option("--out-dir", val.out_dir)->capture_default_str();
    v->add_option("--prefix", val.prefix)->capture_default_str();

    AcfArgs acf;
    auto* c = app.add_subcommand("acf", "Autocorrelation of one trace column");
    c->add_option("--trace", acf.trace, "Trace CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--column", acf.column)->capture_default_str();
    c->add_option("--max-lag", acf.max_lag)->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--burn-in", acf.burn_in)->capture_default_str();
    c->add_option("--out", acf.out, "ACF CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (g->parsed()) return run_generate(*g, gen);
        if (f->parsed()) return run_fit(*f, fit);
        if (b->parsed()) {
            if (base.model != "pirm" && base.model != "dcsbm") throw DomainError("baseline expects --model pirm or dcsbm");
            return run_fit(*b, base);
        }
        if (p->parsed()) return run_predict(pred);
        if (v->parsed()) return run_validate(*v, val);
        if (c->parsed()) return run_acf(acf);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
