// meshpush CLI: sphere | push | check | fit | gradcheck. Every command
// writes a RunManifest next to its primary output; exit codes are 0 on
// success, 1 on runtime errors, 2 on usage errors.
#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshpush/meshpush.hpp"

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw meshpush::Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_manifest(const std::string& primary_output, const std::string& command,
                    const json& config, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_seconds,
                    const std::string& error) {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["command"] = command;
    m["config"] = config;
    m["library_version"] = meshpush::kVersion;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["wall_time_seconds"] = wall_seconds;
    if (error.empty()) {
        m["error"] = nullptr;
    } else {
        m["error"] = error;
    }
    write_json_file(primary_output + ".manifest.json", m);
}

meshpush::Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw meshpush::Error("cannot open " + path);
    return meshpush::load_obj(in).mesh;
}

void save_mesh(const std::string& path, const meshpush::Mesh& mesh) {
    std::ofstream out(path);
    if (!out) throw meshpush::Error("cannot write " + path);
    meshpush::save_obj(mesh, out);
}

// Exception type name for reports; the hierarchy is flat so a chain of
// catches is the whole story.
template <typename Fn>
std::string run_naming_errors(Fn&& fn) {
    try {
        fn();
        return "";
    } catch (const meshpush::OrderingViolated& e) {
        return std::string("OrderingViolated: ") + e.what();
    } catch (const meshpush::PushInfeasible& e) {
        return std::string("PushInfeasible: ") + e.what();
    } catch (const meshpush::VerificationFailed& e) {
        return std::string("VerificationFailed: ") + e.what();
    } catch (const meshpush::SingularActiveSet& e) {
        return std::string("SingularActiveSet: ") + e.what();
    } catch (const meshpush::NonFiniteLoss& e) {
        return std::string("NonFiniteLoss: ") + e.what();
    } catch (const meshpush::ParseError& e) {
        return std::string("ParseError: ") + e.what();
    } catch (const meshpush::Error& e) {
        return std::string("Error: ") + e.what();
    } catch (const std::exception& e) {
        return std::string("Error: ") + e.what();
    }
}

int cmd_sphere(int subdiv, const std::string& out_path) {
    auto t0 = std::chrono::steady_clock::now();
    json config{{"subdiv", subdiv}, {"output", out_path}};
    std::string err = run_naming_errors([&] {
        meshpush::Mesh mesh = meshpush::make_icosphere(subdiv);
        save_mesh(out_path, mesh);
    });
    write_manifest(out_path, "sphere", config, {}, {out_path}, seconds_since(t0), err);
    if (!err.empty()) {
        std::cerr << err << "\n";
        return 1;
    }
    return 0;
}

int cmd_push(const std::string& mesh_path, const std::vector<double>& direction,
             double dmin_scalar, const std::string& dmin_file, double epsilon,
             const std::string& out_path, const std::string& report_path) {
    auto t0 = std::chrono::steady_clock::now();
    json config{{"mesh", mesh_path},
                {"direction", direction},
                {"dmin", dmin_scalar},
                {"dmin_file", dmin_file},
                {"epsilon", epsilon},
                {"output", out_path},
                {"report", report_path}};
    json report;
    report["schema_version"] = kSchemaVersion;

    std::string err = run_naming_errors([&] {
        meshpush::Mesh mesh = load_mesh(mesh_path);

        meshpush::DeformStep step;
        step.direction = {direction[0], direction[1], direction[2]};
        if (!dmin_file.empty()) {
            std::ifstream in(dmin_file);
            if (!in) throw meshpush::Error("cannot open " + dmin_file);
            json arr = json::parse(in);
            step.d_min = arr.get<std::vector<double>>();
        } else {
            step.d_min.assign(mesh.num_vertices(), dmin_scalar);
        }

        meshpush::PushConfig cfg;
        cfg.epsilon = epsilon;
        meshpush::StepResult result = meshpush::push_step(mesh, step, cfg);
        save_mesh(out_path, result.mesh_out);

        meshpush::IntersectionReport after =
            meshpush::count_intersecting_faces(result.mesh_out);
        report["pair_count"] = result.constraints.pair_count;
        report["constraint_count"] = result.constraints.rows.size();
        report["skipped_degenerate"] = result.constraints.skipped_degenerate;
        report["epsilon"] = result.constraints.epsilon;
        report["objective"] = result.lp_solution.objective_value;
        report["lp_status"] = meshpush::to_string(result.lp_solution.status);
        report["lp_iterations"] = result.lp_solution.iterations;
        report["intersecting_fraction_after"] = after.fraction;
    });
    if (!err.empty()) {
        report["error"] = err;
        if (err.rfind("PushInfeasible", 0) == 0) report["lp_status"] = "infeasible";
    }
    write_json_file(report_path, report);
    write_manifest(out_path, "push", config, {mesh_path},
                   {out_path, report_path}, seconds_since(t0), err);
    if (!err.empty()) {
        std::cerr << err << "\n";
        return 1;
    }
    return 0;
}

int cmd_check(const std::string& mesh_path, const std::string& report_path,
              bool fail_on_intersect) {
    auto t0 = std::chrono::steady_clock::now();
    json config{{"mesh", mesh_path},
                {"report", report_path},
                {"fail_on_intersect", fail_on_intersect}};
    json report;
    report["schema_version"] = kSchemaVersion;
    double fraction = 0.0;

    std::string err = run_naming_errors([&] {
        meshpush::Mesh mesh = load_mesh(mesh_path);
        meshpush::IntersectionReport r = meshpush::count_intersecting_faces(mesh);
        fraction = r.fraction;
        report["n_faces"] = mesh.num_faces();
        report["intersecting_count"] = r.intersecting_count;
        report["fraction"] = r.fraction;
        report["pairs_tested"] = r.pairs_tested;
    });
    if (!err.empty()) report["error"] = err;
    report["wall_time_seconds"] = seconds_since(t0);
    write_json_file(report_path, report);
    write_manifest(report_path, "check", config, {mesh_path}, {report_path},
                   seconds_since(t0), err);
    if (!err.empty()) {
        std::cerr << err << "\n";
        return 1;
    }
    if (fail_on_intersect && fraction > 0.0) {
        std::cerr << "intersecting fraction " << fraction << "\n";
        return 1;
    }
    return 0;
}

int cmd_fit(const std::string& target_path, const std::string& parametrization,
            const meshpush::FitConfig& base_cfg, const std::string& out_path,
            const std::string& report_path) {
    auto t0 = std::chrono::steady_clock::now();
    meshpush::FitConfig cfg = base_cfg;
    cfg.parametrization = parametrization == "pushing"
                              ? meshpush::Parametrization::Pushing
                              : meshpush::Parametrization::Dense;

    json config{{"target", target_path},
                {"parametrization", parametrization},
                {"n_steps", cfg.n_steps},
                {"iterations", cfg.iterations},
                {"step_size", cfg.step_size},
                {"lambda_laplacian", cfg.lambda_laplacian},
                {"lambda_crease", cfg.lambda_crease},
                {"surface_samples", cfg.surface_samples},
                {"seed", cfg.seed},
                {"output", out_path},
                {"report", report_path}};
    json report;
    report["schema_version"] = kSchemaVersion;

    std::string err = run_naming_errors([&] {
        meshpush::Mesh target = load_mesh(target_path);
        meshpush::FitOutcome outcome = meshpush::fit(target, cfg);
        save_mesh(out_path, outcome.mesh);

        json curve = json::array();
        for (const auto& it : outcome.report.loss_curve) {
            curve.push_back({{"total_loss", it.total_loss}, {"chamfer", it.chamfer}});
        }
        report["config"] = config;
        report["loss_curve"] = curve;
        report["initial_chamfer"] = outcome.report.initial_chamfer;
        report["final_chamfer"] = outcome.report.final_chamfer;
        report["intersecting_fraction"] = outcome.report.intersecting_fraction;
        report["wall_time_seconds"] = outcome.report.wall_time_seconds;
    });
    if (!err.empty()) report["error"] = err;
    write_json_file(report_path, report);
    write_manifest(out_path, "fit", config, {target_path}, {out_path, report_path},
                   seconds_since(t0), err);
    if (!err.empty()) {
        std::cerr << err << "\n";
        return 1;
    }
    return 0;
}

int cmd_gradcheck(const std::string& selector, uint64_t seed, double step,
                  const std::string& report_path) {
    auto t0 = std::chrono::steady_clock::now();
    json config{{"op", selector}, {"seed", seed}, {"step", step}};

    double threshold = 1e-4;
    if (selector == "lp" || selector == "push_dmin") threshold = 1e-3;
    if (selector == "end_to_end") threshold = 1e-2;

    meshpush::GradcheckReport rep;
    std::string err =
        run_naming_errors([&] { rep = meshpush::gradcheck(selector, seed, step); });
    if (!err.empty()) {
        std::cerr << err << "\n";
        return 1;
    }
    bool pass = rep.max_rel_error <= threshold;
    std::cout << rep.selector << ": max_rel_error=" << rep.max_rel_error
              << " probed=" << rep.probed << " excluded=" << rep.excluded
              << " threshold=" << threshold << " " << (pass ? "PASS" : "FAIL") << "\n";

    if (!report_path.empty()) {
        json report{{"schema_version", kSchemaVersion},
                    {"selector", rep.selector},
                    {"max_rel_error", rep.max_rel_error},
                    {"probed", rep.probed},
                    {"excluded", rep.excluded},
                    {"threshold", threshold},
                    {"pass", pass}};
        write_json_file(report_path, report);
        write_manifest(report_path, "gradcheck", config, {}, {report_path},
                       seconds_since(t0), "");
    }
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-intersecting mesh deformation via LP-constrained pushing"};
    app.require_subcommand(1);

    // sphere
    auto* sphere = app.add_subcommand("sphere", "Write an icosphere OBJ");
    int subdiv = 2;
    std::string sphere_out;
    sphere->add_option("--subdiv", subdiv, "Subdivision level (0-6)")
        ->check(CLI::Range(0, 6));
    sphere->add_option("-o,--output", sphere_out, "Output OBJ path")->required();

    // push
    auto* push = app.add_subcommand("push", "Apply one pushing step to a mesh");
    std::string push_mesh, push_dmin_file, push_out, push_report;
    std::vector<double> push_dir{0.0, 0.0, 1.0};
    double push_dmin = 0.0, push_eps = 0.0;
    push->add_option("--mesh", push_mesh, "Input OBJ")->required();
    push->add_option("--direction", push_dir, "Motion direction x,y,z")
        ->expected(3)
        ->delimiter(',');
    push->add_option("--dmin", push_dmin, "Scalar lower bound for all vertices");
    push->add_option("--dmin-file", push_dmin_file,
                     "JSON array of per-vertex lower bounds");
    push->add_option("--epsilon", push_eps,
                     "Buffer distance (<=0 selects 1e-3 x bbox diagonal)");
    push->add_option("-o,--output", push_out, "Output OBJ path")->required();
    push->add_option("--report", push_report, "JSON report path")->required();

    // check
    auto* check = app.add_subcommand("check", "Count intersecting faces");
    std::string check_mesh, check_report;
    bool fail_on_intersect = false;
    check->add_option("--mesh", check_mesh, "Input OBJ")->required();
    check->add_option("--report", check_report, "JSON report path")->required();
    check->add_flag("--fail-on-intersect", fail_on_intersect,
                    "Exit 1 when the fraction is positive");

    // fit
    auto* fitc = app.add_subcommand("fit", "Fit a deformed sphere to a target mesh");
    std::string fit_target, fit_param = "dense", fit_out, fit_report;
    meshpush::FitConfig fit_cfg;
    fitc->add_option("--target", fit_target, "Target OBJ")->required();
    fitc->add_option("--parametrization", fit_param, "dense or pushing")
        ->check(CLI::IsMember({"dense", "pushing"}));
    fitc->add_option("--n-steps", fit_cfg.n_steps, "Pushing steps");
    fitc->add_option("--iterations", fit_cfg.iterations, "Optimizer iterations");
    fitc->add_option("--step-size", fit_cfg.step_size, "Optimizer step size");
    fitc->add_option("--lambda-laplacian", fit_cfg.lambda_laplacian,
                     "Laplacian smoothness weight");
    fitc->add_option("--lambda-crease", fit_cfg.lambda_crease, "Crease weight");
    fitc->add_option("--samples", fit_cfg.surface_samples, "Surface sample count");
    fitc->add_option("--seed", fit_cfg.seed, "Random seed");
    fitc->add_option("-o,--output", fit_out, "Output OBJ path")->required();
    fitc->add_option("--report", fit_report, "JSON report path")->required();

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    std::string gc_op, gc_report;
    uint64_t gc_seed = 0;
    double gc_step = 1e-6;
    gc->add_option("--op", gc_op, "Component selector")
        ->required()
        ->check(CLI::IsMember(
            {"laplacian", "crease", "chamfer", "lp", "push_dmin", "end_to_end"}));
    gc->add_option("--seed", gc_seed, "Random seed");
    gc->add_option("--step", gc_step, "Probe step");
    gc->add_option("--report", gc_report, "Optional JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sphere->parsed()) return cmd_sphere(subdiv, sphere_out);
        if (push->parsed()) {
            return cmd_push(push_mesh, push_dir, push_dmin, push_dmin_file, push_eps,
                            push_out, push_report);
        }
        if (check->parsed()) return cmd_check(check_mesh, check_report, fail_on_intersect);
        if (fitc->parsed()) {
            return cmd_fit(fit_target, fit_param, fit_cfg, fit_out, fit_report);
        }
        if (gc->parsed()) return cmd_gradcheck(gc_op, gc_seed, gc_step, gc_report);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 2;
}
