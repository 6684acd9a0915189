// Batch driver: one subcommand per scenario, a sweep fan-out, and field/mask
// utilities. Exit codes: 0 pass, 1 threshold failure, 2 usage or config,
// 3 numerical failure.
#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "critflow/capacity.hpp"
#include "critflow/experiment.hpp"
#include "critflow/io.hpp"
#include "critflow/spectral.hpp"

namespace fs = std::filesystem;
using namespace critflow;

namespace {

struct RunArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string out = "results";
    bool no_timestamp = false;
    bool print_config = false;
    bool quiet = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("-c,--config", a.config, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", a.sets, "override a key, key=value (repeatable)");
    cmd->add_option("-o,--out", a.out, "output directory")->capture_default_str();
    cmd->add_flag("--no-timestamp", a.no_timestamp, "leave the timestamp out of the manifest");
    cmd->add_flag("--print-config", a.print_config, "print the resolved config and exit");
    cmd->add_flag("-q,--quiet", a.quiet, "only print failures");
}

ExperimentConfig build_config(const std::string& scenario, const RunArgs& a) {
    ExperimentConfig cfg(scenario);
    if (!a.config.empty()) cfg.merge_file(a.config);
    for (const auto& s : a.sets) cfg.set_assignment(s);
    return cfg;
}

std::mutex out_mutex;

void say(std::ostream& os, const std::string& s) {
    std::lock_guard lock(out_mutex);
    os << s << std::flush;
}

// Runs one scenario into `out`; on error the partial bundle goes to out/failed/.
int run_one(const ExperimentConfig& cfg, const fs::path& out, bool timestamp, bool quiet, const std::string& tag = "") {
    ReportBundle bundle;
    try {
        run_scenario(cfg, bundle);
    } catch (const Error& e) {
        say(std::cerr, tag + "error: " + e.what() + "\n");
        try {
            bundle.scenario = cfg.scenario();
            write_report(bundle, out / "failed", timestamp);
            say(std::cerr, tag + "partial output in " + (out / "failed" / cfg.scenario()).string() + "\n");
        } catch (const Error& w) {
            say(std::cerr, tag + "could not save partial output: " + w.what() + "\n");
        }
        return exit_code(e.kind());
    }
    write_report(bundle, out, timestamp);
    std::ostringstream os;
    for (const auto& r : bundle.summary)
        if (!quiet || !r.pass)
            os << tag << (r.pass ? "PASS " : "FAIL ") << r.check << " = " << r.value << "  [" << r.lower << ", "
               << r.upper << "]\n";
    os << tag << cfg.scenario() << ": " << (bundle.passed() ? "pass" : "threshold failure") << " ("
       << (out / cfg.scenario()).string() << ")\n";
    say(std::cout, os.str());
    return bundle.passed() ? exit_pass : exit_threshold;
}

int run_command(const std::string& scenario, const RunArgs& a) {
    ExperimentConfig cfg = build_config(scenario, a);
    if (a.print_config) {
        std::cout << "scenario = " << scenario << "\n" << cfg.text();
        return exit_pass;
    }
    return run_one(cfg, a.out, !a.no_timestamp, a.quiet);
}

// key=v1,v2 or, for list-valued keys, key=a,b;c,d
std::pair<std::string, std::vector<std::string>> parse_vary(const std::string& s) {
    auto eq = s.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::InvalidConfig, "--vary expects key=v1,v2, got '" + s + "'");
    std::string key = s.substr(0, eq), rest = s.substr(eq + 1);
    const char sep = rest.find(';') != std::string::npos ? ';' : ',';
    std::vector<std::string> values;
    std::stringstream ss(rest);
    for (std::string v; std::getline(ss, v, sep);)
        if (!v.empty()) values.push_back(v);
    require(!values.empty(), ErrorKind::InvalidConfig, "--vary " + key + " has no values");
    return {key, values};
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CRITFLOW_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        require(end && *end == '\0' && v >= 1, ErrorKind::InvalidConfig,
                std::string("CRITFLOW_THREADS must be a positive integer, got '") + env + "'");
        n = static_cast<std::size_t>(v);
    }
    return std::min(n, jobs);
}

int sweep_command(const std::string& scenario, const RunArgs& a, const std::vector<std::string>& vary) {
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& v : vary) axes.push_back(parse_vary(v));

    // cartesian product, last axis fastest; every job is validated before any runs
    std::vector<ExperimentConfig> jobs;
    std::vector<std::string> labels;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        ExperimentConfig cfg = build_config(scenario, a);
        std::string label;
        for (std::size_t k = 0; k < axes.size(); ++k) {
            cfg.set(axes[k].first, axes[k].second[idx[k]]);
            label += (k ? " " : "") + axes[k].first + "=" + axes[k].second[idx[k]];
        }
        cfg.validate();
        jobs.push_back(cfg);
        labels.push_back(label);
        std::size_t k = axes.size();
        while (k > 0 && ++idx[k - 1] == axes[k - 1].second.size()) idx[--k] = 0;
        if (k == 0) break;
    }
    if (a.print_config) {
        for (std::size_t j = 0; j < jobs.size(); ++j) std::cout << "job_" << j << ": " << labels[j] << "\n";
        return exit_pass;
    }

    const fs::path root = fs::path(a.out) / ("sweep-" + scenario);
    fs::create_directories(root);
    std::vector<int> codes(jobs.size(), exit_pass);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j; (j = next++) < jobs.size();) {
            const std::string tag = "[job_" + std::to_string(j) + "] ";
            try {
                codes[j] = run_one(jobs[j], root / ("job_" + std::to_string(j)), !a.no_timestamp, a.quiet, tag);
            } catch (const Error& e) {
                say(std::cerr, tag + "error: " + e.what() + "\n");
                codes[j] = exit_code(e.kind());
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < worker_count(jobs.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::string index = "job,settings,exit_code\n";
    for (std::size_t j = 0; j < jobs.size(); ++j)
        index += "job_" + std::to_string(j) + ",\"" + labels[j] + "\"," + std::to_string(codes[j]) + "\n";
    write_text(root / "sweep.csv", index);
    // the most serious outcome wins: numerical over usage over threshold
    int worst = exit_pass;
    for (int c : codes)
        if (c == exit_numerical || (c == exit_usage && worst != exit_numerical) || (c == exit_threshold && worst == exit_pass))
            worst = c;
    std::cout << "sweep: " << jobs.size() << " jobs, exit " << worst << " (" << (root / "sweep.csv").string() << ")\n";
    return worst;
}

const char* rank_name(Rank r) {
    switch (r) {
        case Rank::scalar: return "scalar";
        case Rank::vector: return "vector";
        default: return "tensor";
    }
}

int field_info(const std::string& path) {
    RealField f = load_field(path);
    std::printf("N        %d\nL        %.17g\nrank     %s\nmax_abs  %.6e\nrms      %.6e\n", f.grid().n(),
                f.grid().length(), rank_name(f.rank()), max_abs(f), rms(f));
    auto means = component_means(f);
    double m = 0.0;
    for (double v : means) m = std::max(m, std::abs(v));
    std::printf("max_mean %.6e\n", m);
    if (f.rank() == Rank::vector) std::printf("div_l2   %.6e\n", divergence_norm(f));
    std::printf("finite   %s\n", f.all_finite() ? "yes" : "no");
    return exit_pass;
}

int field_diff(const std::string& a, const std::string& b, double tol) {
    RealField fa = load_field(a), fb = load_field(b);
    fa.check_compatible(fb);
    const double d = max_abs(fa - fb);
    const double scale = max_abs(fb);
    const double rel = scale > 0 ? d / scale : d;
    std::printf("max_abs_diff %.6e\nrelative     %.6e\n", d, rel);
    if (tol >= 0) return rel <= tol ? exit_pass : exit_threshold;
    return exit_pass;
}

int mask_info(const std::string& path, double L) {
    CompactMask K = load_mask(path, L);
    auto bb = K.bounding_box();
    std::printf("N      %d\nnodes  %zu\nbbox   [%d..%d] x [%d..%d] x [%d..%d]\n", K.grid().n(), K.count(), bb[0], bb[3],
                bb[1], bb[4], bb[2], bb[5]);
    return exit_pass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critflow: stationary flows, capacities, resolvents, semigroups and stability experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", code_version());

    RunArgs args;
    std::string chosen;
    for (const auto& id : scenario_ids()) {
        auto* cmd = app.add_subcommand(id, scenario_description(id));
        add_run_options(cmd, args);
        cmd->callback([&chosen, id] { chosen = id; });
    }

    auto* list = app.add_subcommand("list", "list scenarios and their descriptions");

    std::string sweep_scenario;
    std::vector<std::string> vary;
    auto* sweep = app.add_subcommand("sweep", "run a scenario over a grid of settings, in parallel (CRITFLOW_THREADS caps workers)");
    sweep->add_option("scenario", sweep_scenario, "scenario id")->required();
    sweep->add_option("--vary", vary, "key=v1,v2 (use ';' between values of list keys)")->required();
    add_run_options(sweep, args);

    auto* field = app.add_subcommand("field", "VFLD1 field utilities");
    field->require_subcommand(1);
    std::string fpath, fpath2;
    double tol = -1.0;
    auto* info = field->add_subcommand("info", "header and basic statistics");
    info->add_option("file", fpath)->required();
    auto* diff = field->add_subcommand("diff", "max-norm difference of two fields");
    diff->add_option("a", fpath)->required();
    diff->add_option("b", fpath2)->required();
    diff->add_option("--tol", tol, "exit 1 when the relative difference exceeds this");

    auto* mask = app.add_subcommand("mask", "MASK1 obstacle utilities");
    mask->require_subcommand(1);
    double mask_L = 1.0;
    auto* minfo = mask->add_subcommand("info", "node count and bounding box");
    minfo->add_option("file", fpath)->required();
    minfo->add_option("-L,--length", mask_L, "box length")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    try {
        if (list->parsed()) {
            for (const auto& id : scenario_ids()) std::cout << id << "\t" << scenario_description(id) << "\n";
            return exit_pass;
        }
        if (sweep->parsed()) return sweep_command(sweep_scenario, args, vary);
        if (info->parsed()) return field_info(fpath);
        if (diff->parsed()) return field_diff(fpath, fpath2, tol);
        if (minfo->parsed()) return mask_info(fpath, mask_L);
        return run_command(chosen, args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    }
}
