#include "swipt/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swipt/scenario.hpp"
#include "swipt/surrogate.hpp"

namespace swipt {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Context {
    Scenario scenario;
    std::string scenario_hash;  // fnv1a of the scenario file bytes
    std::string out_dir;
};

std::string artifact_path(const Context& ctx, const std::string& stem, const std::string& ext) {
    return (fs::path(ctx.out_dir) / (stem + "_" + ctx.scenario.name + ext)).string();
}

void stamp(json& j, const Context& ctx) {
    j["tool_version"] = kToolVersion;
    j["scenario_hash"] = ctx.scenario_hash;
}

void write_json_artifact(const Context& ctx, const std::string& path, json j) {
    stamp(j, ctx);
    atomic_write_file(path, j.dump(2) + "\n");
}

void write_csv_artifact(const Context& ctx, const std::string& path, const std::string& csv) {
    atomic_write_file(path, csv);
    json meta;
    stamp(meta, ctx);
    atomic_write_file(path + ".meta.json", meta.dump(2) + "\n");
}

void print_summary(const json& j) { std::cout << j.dump() << std::endl; }

struct Backends {
    std::shared_ptr<EnvelopeModel> envelope;
    std::shared_ptr<SymbolResponder> responder;
    VoltageQuantizer quantizer;
};

Backends make_backends(const Context& ctx) {
    const Scenario& s = ctx.scenario;
    const ChannelSpec ch = s.channel_spec();
    Backends b;
    b.envelope = std::make_shared<EnvelopeModel>(s.circuit, ch.h_e_mag * s.r_max());
    b.quantizer = VoltageQuantizer(s.state_count, b.envelope->v_max());
    if (s.backend == "circuit") {
        b.responder = std::make_shared<EnvelopeResponder>(*b.envelope);
    } else if (s.backend == "table") {
        const auto grid = grid_dataset(*b.envelope, 65, 65);
        b.responder = std::make_shared<TableResponder>(
            BilinearTable::from_grid(grid, SurrogateTarget::FinalVoltage),
            BilinearTable::from_grid(grid, SurrogateTarget::AveragePower));
    } else {  // surrogate
        const std::string fv_path = artifact_path(ctx, "model_fv", ".json");
        const std::string pw_path = artifact_path(ctx, "model_pw", ".json");
        if (!fs::exists(fv_path) || !fs::exists(pw_path))
            throw std::invalid_argument("surrogate backend needs trained models; run `train` "
                                        "first (expected " + fv_path + ")");
        b.responder = std::make_shared<SurrogateResponder>(
            MlpModel::from_json(read_file(fv_path)), MlpModel::from_json(read_file(pw_path)));
    }
    return b;
}

TransitionModel build_model(const Context& ctx, const Backends& b) {
    const Scenario& s = ctx.scenario;
    const ChannelSpec ch = s.channel_spec();
    return build_transition_model(*b.responder, b.quantizer, s.constellation().amplitudes,
                                  ch.h_e_mag, s.subsamples);
}

json result_to_json(const SolveResult& r) {
    json j;
    j["status"] = to_string(r.status);
    j["achieved_power_watts"] = r.achieved_power;
    j["achieved_mi_bits"] = r.achieved_mi;
    j["balance_residual"] = r.balance_residual;
    j["lambda"] = r.lambda;
    j["fw_gap"] = r.fw_gap;
    if (!r.joint.pi.empty()) j["joint_distribution"] = r.joint.pi;
    if (!r.states.gamma.empty()) j["state_distribution"] = r.states.gamma;
    if (!r.amplitude_pdf.p.empty()) j["amplitude_pdf"] = r.amplitude_pdf.p;
    j["outer_iterations"] = r.outer_iterations;
    j["inner_iterations_max"] = r.inner_iterations_max;
    j["terminated_by_tolerance"] = r.terminated_by_tolerance;
    json trace = json::array();
    for (const auto& t : r.trace)
        trace.push_back({{"outer", t.outer},
                         {"inner", t.inner},
                         {"stage", t.stage},
                         {"objective_watts", t.objective},
                         {"mi_bits", t.mi},
                         {"residual", t.residual}});
    j["trace"] = trace;
    return j;
}

int cmd_simulate(const Context& ctx) {
    Backends b = make_backends(ctx);
    const auto grid = grid_dataset(*b.envelope, 17, 17);
    const std::string path = artifact_path(ctx, "simulate", ".csv");
    write_csv_artifact(ctx, path, dataset_to_csv(grid));
    print_summary({{"command", "simulate"},
                   {"rows", grid.size()},
                   {"v_max_volts", b.envelope->v_max()},
                   {"artifact", path}});
    return 0;
}

int cmd_dataset(const Context& ctx, std::size_t samples) {
    Backends b = make_backends(ctx);
    const auto data = generate_dataset(*b.envelope, samples, ctx.scenario.dataset_seed);
    const std::string path = artifact_path(ctx, "dataset", ".csv");
    write_csv_artifact(ctx, path, dataset_to_csv(data));
    print_summary({{"command", "dataset"}, {"rows", data.size()}, {"artifact", path}});
    return 0;
}

int cmd_train(const Context& ctx, std::size_t samples, std::size_t epochs,
              const std::string& dataset_path) {
    Backends b = make_backends(ctx);
    std::vector<DatasetSample> data;
    if (!dataset_path.empty()) {
        data = dataset_from_csv(read_file(dataset_path));
    } else {
        data = generate_dataset(*b.envelope, samples, ctx.scenario.dataset_seed);
    }
    // split with the proportions of the reference experiment (11000/3000/750)
    const std::size_t n = data.size();
    const std::size_t n_train = static_cast<std::size_t>(std::round(n * 11000.0 / 14750.0));
    const std::size_t n_val = static_cast<std::size_t>(std::round(n * 3000.0 / 14750.0));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw std::invalid_argument("train: dataset too small to split");
    std::vector<DatasetSample> train(data.begin(), data.begin() + n_train);
    std::vector<DatasetSample> val(data.begin() + n_train, data.begin() + n_train + n_val);
    std::vector<DatasetSample> test(data.begin() + n_train + n_val, data.end());

    TrainConfig cfg;
    cfg.seed = ctx.scenario.dataset_seed;
    cfg.epochs = epochs;

    json report;
    for (auto target : {SurrogateTarget::FinalVoltage, SurrogateTarget::AveragePower}) {
        const bool is_fv = target == SurrogateTarget::FinalVoltage;
        TrainReport rep;
        MlpModel model = train_mlp(train, val, target, cfg, &rep);
        const double test_mape = mape_percent(model, test, target);
        const std::string path = artifact_path(ctx, is_fv ? "model_fv" : "model_pw", ".json");
        atomic_write_file(path, model.to_json());
        json epochs_json = json::array();
        for (const auto& e : rep.epochs) epochs_json.push_back({e.train_mape, e.val_mape});
        report[is_fv ? "final_voltage" : "average_power"] = {
            {"artifact", path},
            {"best_epoch", rep.best_epoch},
            {"best_val_mape_percent", rep.best_val_mape},
            {"test_mape_percent", test_mape},
            {"epochs", epochs_json}};
    }
    const std::string rpath = artifact_path(ctx, "train_report", ".json");
    write_json_artifact(ctx, rpath, report);
    print_summary({{"command", "train"},
                   {"artifact", rpath},
                   {"fv_test_mape", report["final_voltage"]["test_mape_percent"]},
                   {"pw_test_mape", report["average_power"]["test_mape_percent"]}});
    return 0;
}

int cmd_build_mdp(const Context& ctx) {
    Backends b = make_backends(ctx);
    TransitionModel model = build_model(ctx, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < model.n_states; ++i)
        for (std::size_t k = 0; k < model.n_amps; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < model.n_states; ++j) sum += model.rho_at(i, j, k);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    const std::string path = artifact_path(ctx, "mdp", ".json");
    json j = json::parse(model.to_json());
    write_json_artifact(ctx, path, j);
    print_summary({{"command", "build-mdp"},
                   {"states", model.n_states},
                   {"amplitudes", model.n_amps},
                   {"stochasticity_residual", worst},
                   {"clamp_warnings", model.clamp_warnings},
                   {"artifact", path}});
    return 0;
}

int cmd_solve(const Context& ctx, const std::string& scheme, double i_req) {
    Backends b = make_backends(ctx);
    const Scenario& s = ctx.scenario;
    const ChannelSpec ch = s.channel_spec();
    TransitionModel model = build_model(ctx, b);
    MiEvaluator ev(s.constellation(), ch.h_i_mag, ch.sigma_sq, s.mi_grid);
    SolverConfig cfg = s.solver;
    if (i_req >= 0.0) cfg.i_req_bits = i_req;

    SolveResult r;
    if (scheme == "i") r = solve_scheme1(model, ev, cfg);
    else if (scheme == "ii") r = solve_scheme2(model, ev, cfg);
    else r = solve_scheme3(memoryless_power_profile(model), s.constellation(), ev, cfg);

    const std::string path = artifact_path(ctx, "solve_" + scheme, ".json");
    json j = result_to_json(r);
    j["i_req_bits"] = cfg.i_req_bits;
    j["scheme"] = scheme;
    write_json_artifact(ctx, path, j);
    print_summary({{"command", "solve"},
                   {"scheme", scheme},
                   {"status", to_string(r.status)},
                   {"achieved_power_watts", r.achieved_power},
                   {"achieved_mi_bits", r.achieved_mi},
                   {"artifact", path}});
    return r.status == SolveStatus::Infeasible ? 3 : 0;
}

int cmd_sweep(const Context& ctx, const std::string& scheme, std::size_t points) {
    Backends b = make_backends(ctx);
    const Scenario& s = ctx.scenario;
    const ChannelSpec ch = s.channel_spec();
    TransitionModel model = build_model(ctx, b);
    MiEvaluator ev(s.constellation(), ch.h_i_mag, ch.sigma_sq, s.mi_grid);

    Scheme sch = scheme == "i" ? Scheme::I : (scheme == "ii" ? Scheme::II : Scheme::III);
    const auto pts = sweep_rate_power(sch, model, ev, s.solver, points);

    std::ostringstream csv;
    csv << "i_req_bits,achieved_mi_bits,power_watts,bitrate_bps,scheme,status\n";
    for (const auto& p : pts)
        csv << format_sig9(p.i_req_bits) << ',' << format_sig9(p.mi_bits) << ','
            << format_sig9(p.power_watts) << ','
            << format_sig9(p.mi_bits / s.circuit.symbol_duration) << ',' << scheme << ','
            << to_string(p.status) << '\n';
    const std::string path = artifact_path(ctx, "sweep_" + scheme, ".csv");
    write_csv_artifact(ctx, path, csv.str());
    print_summary({{"command", "sweep"},
                   {"scheme", scheme},
                   {"points_requested", points},
                   {"points_feasible", pts.size()},
                   {"artifact", path}});
    return 0;
}

int cmd_validate(const Context& ctx) {
    // the invariant suite runs at reduced sizes
    Context rctx = ctx;
    rctx.scenario.state_count = 8;
    rctx.scenario.constellation_size = 16;
    rctx.scenario.subsamples = 8;
    rctx.scenario.mi_grid = 2048;
    rctx.scenario.solver.fw_max_iters = 300;
    const Scenario& s = rctx.scenario;

    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << std::endl;
        if (!ok) ++failures;
    };

    Backends b = make_backends(rctx);
    TransitionModel model = build_model(rctx, b);

    double worst = 0.0;
    for (std::size_t i = 0; i < model.n_states; ++i)
        for (std::size_t k = 0; k < model.n_amps; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < model.n_states; ++j) sum += model.rho_at(i, j, k);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    check("transition row-stochasticity <= 1e-9", worst <= 1e-9);

    const std::vector<double> uniform(model.n_amps, 1.0 / static_cast<double>(model.n_amps));
    bool fixed_ok = false;
    try {
        const StateDistribution g = fit_states_pseudoinverse(model, uniform);
        const auto chain = model.chain_matrix(uniform);
        double res = 0.0;
        for (std::size_t j = 0; j < model.n_states; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < model.n_states; ++i) acc += g.gamma[i] * chain[i][j];
            res = std::max(res, std::abs(acc - g.gamma[j]));
        }
        fixed_ok = res <= 1e-8;
    } catch (const std::exception&) {
        fixed_ok = false;
    }
    check("steady-state fixed point <= 1e-8", fixed_ok);

    const ChannelSpec ch = s.channel_spec();
    MiEvaluator ev(s.constellation(), ch.h_i_mag, ch.sigma_sq, s.mi_grid);
    const double norm = ev.density_normalization(uniform);
    check("output density normalization within 1e-6", std::abs(norm - 1.0) <= 1e-6);

    bool ordering_ok = false;
    bool monotone_ok = false;
    try {
        SolverConfig cfg = s.solver;
        const double max_mi = max_mutual_information(s.constellation(), ev, cfg);
        cfg.i_req_bits = 0.5 * max_mi;
        SolveResult r3 =
            solve_scheme3(memoryless_power_profile(model), s.constellation(), ev, cfg);
        SolveResult r2 = solve_scheme2(model, ev, cfg);
        std::vector<std::vector<double>> warm(model.n_states, r2.amplitude_pdf.p);
        for (std::size_t i = 0; i < model.n_states; ++i)
            for (std::size_t k = 0; k < model.n_amps; ++k)
                warm[i][k] = r2.states.gamma[i] * r2.amplitude_pdf.p[k];
        SolveResult r1 = solve_scheme1(model, ev, cfg, &warm);
        const double p3_on_mdp = power_of_shared_pdf(model, r3.amplitude_pdf.p);
        ordering_ok = r1.achieved_power >= r2.achieved_power - 1e-6 &&
                      r2.achieved_power >= p3_on_mdp - 1e-6;

        const auto pts = sweep_rate_power(Scheme::III, model, ev, s.solver, 5);
        monotone_ok = pts.size() >= 2;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i].power_watts > pts[i - 1].power_watts + 1e-12) monotone_ok = false;
    } catch (const std::exception&) {
        ordering_ok = false;
        monotone_ok = false;
    }
    check("scheme ordering P1 >= P2 >= P3-on-MDP", ordering_ok);
    check("sweep power nonincreasing in MI", monotone_ok);

    print_summary({{"command", "validate"}, {"failures", failures}});
    return failures == 0 ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"rate-power region tools for SWIPT systems with nonlinear EH circuits"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string scheme = "iii";
    std::string backend_override;
    std::string out_override;
    std::string dataset_path;
    double i_req = -1.0;
    std::size_t points = 12;
    std::size_t samples = 2750;
    std::size_t epochs = 400;
    std::optional<std::uint64_t> seed_override;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "scenario JSON path")->required();
        cmd->add_option("--backend", backend_override, "circuit|surrogate|table");
        cmd->add_option("--seed", seed_override, "override scenario seeds");
        cmd->add_option("--out", out_override, "output directory");
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "sample the circuit response surface");
    add_common(c_sim);
    CLI::App* c_data = app.add_subcommand("dataset", "generate training tuples");
    add_common(c_data);
    c_data->add_option("--samples", samples, "number of tuples");
    CLI::App* c_train = app.add_subcommand("train", "train the circuit surrogates");
    add_common(c_train);
    c_train->add_option("--samples", samples, "number of tuples when generating");
    c_train->add_option("--epochs", epochs, "training epochs");
    c_train->add_option("--dataset", dataset_path, "pre-generated dataset CSV");
    CLI::App* c_mdp = app.add_subcommand("build-mdp", "build and store the transition model");
    add_common(c_mdp);
    CLI::App* c_solve = app.add_subcommand("solve", "solve one scheme at a fixed MI requirement");
    add_common(c_solve);
    c_solve->add_option("--scheme", scheme, "i|ii|iii")->required();
    c_solve->add_option("--i-req", i_req, "required mutual information, bits/symbol");
    CLI::App* c_sweep = app.add_subcommand("sweep", "trace the rate-power boundary");
    add_common(c_sweep);
    c_sweep->add_option("--scheme", scheme, "i|ii|iii")->required();
    c_sweep->add_option("--points", points, "sweep points");
    CLI::App* c_val = app.add_subcommand("validate", "run the invariant suite at reduced sizes");
    add_common(c_val);

    try {
        std::vector<std::string> argv_rev(args.rbegin(), args.rend());
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << std::endl;
        return 2;
    }

    try {
        std::string text;
        try {
            text = read_file(scenario_path);
        } catch (const std::runtime_error& e) {
            std::cerr << "error: " << e.what() << std::endl;
            return 2;
        }
        Context ctx;
        ctx.scenario = Scenario::from_json_text(text);
        ctx.scenario_hash = hex_u64(fnv1a(text));
        if (!backend_override.empty()) ctx.scenario.backend = backend_override;
        if (seed_override) {
            ctx.scenario.dataset_seed = *seed_override;
            ctx.scenario.rollout_seed = *seed_override;
            ctx.scenario.fading_seed = *seed_override;
        }
        ctx.out_dir = out_override.empty() ? ctx.scenario.output_dir : out_override;
        ctx.scenario.validate();
        if (ctx.scenario.backend != "circuit" && ctx.scenario.backend != "surrogate" &&
            ctx.scenario.backend != "table")
            throw std::invalid_argument("backend: must be circuit, surrogate or table");

        if (scheme != "i" && scheme != "ii" && scheme != "iii")
            throw std::invalid_argument("scheme: must be i, ii or iii");

        if (c_sim->parsed()) return cmd_simulate(ctx);
        if (c_data->parsed()) return cmd_dataset(ctx, samples);
        if (c_train->parsed()) return cmd_train(ctx, samples, epochs, dataset_path);
        if (c_mdp->parsed()) return cmd_build_mdp(ctx);
        if (c_solve->parsed()) return cmd_solve(ctx, scheme, i_req);
        if (c_sweep->parsed()) return cmd_sweep(ctx, scheme, points);
        if (c_val->parsed()) return cmd_validate(ctx);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 4;
    }
}

}  // namespace swipt
