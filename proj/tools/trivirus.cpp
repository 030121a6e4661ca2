// Command-line front end: runs scenario configs and the built-in presets.

#include "trivirus/io.hpp"
#include "trivirus/preset_scenarios.hpp"
#include "trivirus/scenario.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace ts = trivirus::scenario;

namespace {

enum Exit { Ok = 0, ExpectationFailed = 1, ConfigError = 2, NumericalFailure = 3 };

int report(const ts::RunResult& r) {
    std::cout << ts::formatSummary(r) << "artifacts: " << r.outDir << '\n';
    return r.passed() ? Ok : ExpectationFailed;
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const trivirus::io::SchemaError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ConfigError;
    } catch (const trivirus::PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << '\n';
        return ConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return NumericalFailure;
    }
}

// Runs only the plan items of one kind, keeping expectations out of the way.
ts::Scenario restrictPlan(ts::Scenario s, ts::PlanItem::Kind kind) {
    std::vector<ts::PlanItem> kept;
    for (const auto& item : s.plan)
        if (item.kind == kind) {
            kept.push_back(item);
            break;
        }
    if (kept.empty()) {
        ts::PlanItem item;
        item.kind = kind;
        kept.push_back(item);
    }
    s.plan = kept;
    s.expectations.clear();
    return s;
}

void printFile(const std::string& path) {
    std::ifstream in(path);
    std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Competitive tri-virus SIS network lab"};
    app.require_subcommand(1);

    std::string config, presetName, outDir, emitPath;
    std::uint64_t seed = 0;
    bool parallel = false, quiet = false;

    auto addRunFlags = [&](CLI::App* cmd) {
        cmd->add_option("--out", outDir, "Output directory (default: $TRIVIRUS_OUT/<name> or ./out/<name>)");
        cmd->add_option("--seed", seed, "Override the global seed");
        cmd->add_flag("--parallel", parallel, "Run independent plan items concurrently");
        cmd->add_flag("-q,--quiet", quiet, "Suppress progress lines");
    };

    auto* run = app.add_subcommand("run", "Execute a scenario config");
    run->add_option("config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    addRunFlags(run);

    auto* preset = app.add_subcommand("preset", "Execute a built-in preset scenario");
    preset->add_option("name", presetName, "Preset name (see list-presets)")->required();
    preset->add_option("--emit-config", emitPath, "Write the preset as a config file and exit");
    addRunFlags(preset);

    auto* list = app.add_subcommand("list-presets", "List the built-in presets");

    auto* check = app.add_subcommand("check", "Evaluate the analytic conditions only");
    check->add_option("config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    check->add_option("--out", outDir, "Output directory");
    check->add_flag("-q,--quiet", quiet, "Suppress progress lines");

    auto* enumerate = app.add_subcommand("enumerate", "Enumerate equilibria only");
    enumerate->add_option("config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    enumerate->add_option("--out", outDir, "Output directory");
    enumerate->add_option("--seed", seed, "Override the global seed");
    enumerate->add_flag("-q,--quiet", quiet, "Suppress progress lines");

    CLI11_PARSE(app, argc, argv);

    auto options = [&](CLI::App* cmd) {
        ts::RunOptions o;
        if (!outDir.empty()) o.outDir = outDir;
        if (const auto* opt = cmd->get_option_no_throw("--seed"); opt && opt->count()) o.seed = seed;
        o.parallel = parallel;
        if (!quiet) o.log = &std::cerr;
        return o;
    };

    if (list->parsed()) {
        for (const auto& p : ts::listPresets()) std::printf("%-10s %s\n", p.name.c_str(), p.description.c_str());
        return Ok;
    }
    if (run->parsed())
        return guarded([&] { return report(ts::runScenario(ts::loadScenario(config), options(run))); });
    if (preset->parsed()) {
        return guarded([&] {
            ts::Scenario s = ts::presetScenario(presetName);
            if (preset->count("--seed")) s.seed = seed;
            if (!emitPath.empty()) {
                std::ofstream out(emitPath);
                if (!out) throw trivirus::io::SchemaError("cannot write " + emitPath);
                out << trivirus::io::pretty(ts::toJson(s));
                return static_cast<int>(Ok);
            }
            return report(ts::runScenario(s, options(preset)));
        });
    }
    if (check->parsed()) {
        return guarded([&] {
            const auto s = restrictPlan(ts::loadScenario(config), ts::PlanItem::Kind::CheckConditions);
            const auto r = ts::runScenario(s, options(check));
            printFile(r.outDir + "/conditions.json");
            return static_cast<int>(Ok);
        });
    }
    if (enumerate->parsed()) {
        return guarded([&] {
            const auto s = restrictPlan(ts::loadScenario(config), ts::PlanItem::Kind::Enumerate);
            const auto r = ts::runScenario(s, options(enumerate));
            for (const auto& label : r.facts["enumeration.labels"]) std::cout << label.get<std::string>() << '\n';
            std::cout << "complete: " << r.facts["enumeration.complete"] << ", nondegenerate: "
                      << r.facts["enumeration.nondegenerate"] << ", index sum over saturated: "
                      << r.facts["enumeration.indexSumSaturated"] << '\n';
            return static_cast<int>(Ok);
        });
    }
    return Ok;
}
