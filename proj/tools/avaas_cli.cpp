#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avaas/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitDependency = 2;
constexpr int kExitInternal = 3;

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw avaas::ValidationError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

struct GlobalOpts {
    std::string scenario;
    std::string out_dir = "out";
    long seed = -1;  // -1: keep the scenario's seed
    int workers = 1;
};

avaas::ScenarioConfig load(const GlobalOpts& g, std::string& text) {
    text = read_file(g.scenario);
    avaas::ScenarioConfig cfg = avaas::load_scenario(text);
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    return cfg;
}

void run_stages(const GlobalOpts& g, std::set<avaas::Stage> stages) {
    std::string text;
    avaas::ScenarioConfig cfg = load(g, text);
    avaas::PipelineResult res = avaas::run_pipeline(cfg, text, std::move(stages), g.out_dir, g.workers);
    for (const std::string& a : res.artifacts) std::cout << "wrote " << g.out_dir << "/" << a << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AVaaS traffic state estimation pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--scenario", g.scenario, "scenario file")->required();
    app.add_option("--seed", g.seed, "override the scenario seed");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--workers", g.workers, "worker pool size for detect-estimate");

    auto* sim = app.add_subcommand("simulate", "run the microsimulation and emit trajectory + ground truth");

    auto* ingest = app.add_subcommand("ingest", "validate an external trajectory log and emit ground truth");
    std::string ingest_file;
    bool lenient = false;
    std::string delim = ",";
    ingest->add_option("--input", ingest_file, "trajectory CSV to ingest")->required();
    ingest->add_flag("--lenient", lenient, "drop bad rows instead of failing");
    ingest->add_option("--delimiter", delim, "field delimiter (default comma)");

    auto* est = app.add_subcommand("estimate", "sample observers, detect, and estimate lane states");
    auto* clu = app.add_subcommand("cluster", "cluster lanes by average traffic state");
    auto* cmp = app.add_subcommand("compare", "compare estimates against ground truth");
    auto* mfd = app.add_subcommand("mfd", "emit cluster- and network-level MFD series");

    auto* swp = app.add_subcommand("sweep", "detect-estimate + compare across penetration rates");
    std::vector<double> penetrations{5.0, 10.0, 20.0};
    swp->add_option("--penetrations", penetrations, "penetration rates in percent");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            run_stages(g, {avaas::Stage::Simulate, avaas::Stage::GroundTruth});
        } else if (ingest->parsed()) {
            std::string text;
            avaas::ScenarioConfig cfg = load(g, text);
            avaas::RoadNetwork net = cfg.build_network();
            if (delim.size() != 1) throw avaas::ValidationError("delimiter must be a single character");
            std::ifstream is(ingest_file);
            if (!is) throw avaas::ValidationError("cannot open '" + ingest_file + "'");
            avaas::IngestReport report;
            avaas::TrajectoryLog log = avaas::parse_trajectory(is, net, !lenient, delim[0], &report);
            if (report.rows_dropped > 0) {
                std::cerr << "dropped " << report.rows_dropped << " of " << report.rows_read << " rows\n";
                for (const std::string& d : report.diagnostics) std::cerr << "  " << d << "\n";
            }
            std::filesystem::create_directories(g.out_dir);
            std::ofstream os(std::filesystem::path(g.out_dir) / "trajectory.csv", std::ios::binary);
            avaas::serialize_trajectory(log, os);
            os.close();
            std::cout << "wrote " << g.out_dir << "/trajectory.csv\n";
            run_stages(g, {avaas::Stage::GroundTruth});
        } else if (est->parsed()) {
            run_stages(g, {avaas::Stage::DetectEstimate});
        } else if (clu->parsed()) {
            run_stages(g, {avaas::Stage::Cluster});
        } else if (cmp->parsed()) {
            run_stages(g, {avaas::Stage::Compare});
        } else if (mfd->parsed()) {
            run_stages(g, {avaas::Stage::Mfd});
        } else if (swp->parsed()) {
            std::string text;
            avaas::ScenarioConfig cfg = load(g, text);
            avaas::RoadNetwork net = cfg.build_network();
            std::filesystem::path out(g.out_dir);
            std::ifstream is(out / "trajectory.csv");
            if (!is)
                throw avaas::DependencyError("missing artifact 'trajectory.csv': run 'simulate' first");
            avaas::TrajectoryLog log = avaas::parse_trajectory(is, net);
            auto rows = avaas::penetration_sweep(cfg, net, log, penetrations);
            std::ofstream os(out / "sweep_summary.csv", std::ios::binary);
            avaas::write_sweep(rows, os);
            std::cout << "wrote " << g.out_dir << "/sweep_summary.csv\n";
        }
    } catch (const avaas::DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return kExitDependency;
    } catch (const avaas::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const avaas::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const avaas::ContractError& e) {
        std::cerr << "contract error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
