// engine: command-line front end for the composition engine.
//
//   engine run --scenario <file> --iterations N [--feedback <file>] [--capacity K] [--seed S] [--report <out.json>]
//   engine compose --scenario <file> --feature <id> [--workflow <out.json>]
//   engine registry list --scenario <file>
//   engine check --scenario <file> --state <saved.json>
//
// Exit status: 0 every selected feature delivered, 2 some feature failed,
// 3 input or scenario error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "am4sc/controller.hpp"
#include "am4sc/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFeatureFailed = 2;
constexpr int kInputError = 3;

am4sc::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw am4sc::Error(am4sc::ErrorCode::ScenarioError, "cannot open " + path);
    try {
        return am4sc::json::parse(in);
    } catch (const am4sc::json::exception& e) {
        throw am4sc::Error(am4sc::ErrorCode::ScenarioError, path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw am4sc::Error(am4sc::ErrorCode::ScenarioError, "cannot write " + path);
    out << text << '\n';
}

std::int64_t resolve_seed(const std::optional<std::int64_t>& flag)
{
    if (flag)
        return *flag;
    if (const char* env = std::getenv("AM4SC_SEED")) {
        try {
            return std::stoll(env);
        } catch (const std::exception&) {
            throw am4sc::Error(am4sc::ErrorCode::ScenarioError, "AM4SC_SEED is not an integer");
        }
    }
    return 0;
}

std::string params_text(const am4sc::ParamList& ps)
{
    std::string out;
    for (const auto& p : ps) {
        if (!out.empty())
            out += ", ";
        out += p.name + ":" + p.datatype.to_string();
    }
    return out;
}

struct RunArgs {
    std::string scenario;
    int iterations = 1;
    std::string feedback;
    std::optional<int> capacity;
    std::optional<std::int64_t> seed;
    std::string report;
};

int cmd_run(const RunArgs& a)
{
    auto state = am4sc::EngineState::from_scenario(am4sc::load_scenario(a.scenario));
    am4sc::EngineConfig config;
    if (a.capacity)
        config.capacity = *a.capacity;
    config.seed = resolve_seed(a.seed);

    am4sc::FeedbackSource source;
    if (!a.feedback.empty()) {
        std::vector<am4sc::Feedback> fbs;
        try {
            fbs = am4sc::feedbacks_from_json(read_json(a.feedback));
        } catch (const am4sc::Error& e) {
            throw am4sc::Error(am4sc::ErrorCode::ScenarioError, a.feedback + ": " + e.what());
        }
        source = am4sc::FeedbackQueue(std::move(fbs));
    }

    auto reports = am4sc::run_project(state, config, a.iterations, source);
    bool any_failed = false;
    for (const auto& r : reports) {
        for (const auto& rec : r.records) {
            any_failed = any_failed || rec.status != am4sc::FeatureStatus::Delivered;
            std::cerr << "iteration " << r.iteration << ": " << rec.feature_id << " " << am4sc::to_string(rec.status)
                      << " (attempts " << rec.attempts << ")";
            if (!rec.failure_reason.empty())
                std::cerr << " " << rec.failure_reason;
            std::cerr << '\n';
        }
        for (const auto& [id, ok] : r.regression) {
            if (!ok)
                std::cerr << "iteration " << r.iteration << ": regression " << id << " FAILING\n";
        }
    }

    auto text = am4sc::project_to_json(reports, state).dump(2);
    if (a.report.empty())
        std::cout << text << '\n';
    else
        write_text(a.report, text);
    return any_failed ? kFeatureFailed : kOk;
}

int cmd_compose(const std::string& scenario_path, const std::string& feature_id, const std::string& workflow_path)
{
    auto scenario = am4sc::load_scenario(scenario_path);
    auto registry = am4sc::build_registry(scenario);
    const auto* feature = am4sc::find_feature(scenario.backlog, feature_id);
    if (!feature)
        throw am4sc::Error(am4sc::ErrorCode::UnknownFeature, "no feature '" + feature_id + "' in " + scenario_path);

    am4sc::GoalSignature goal{feature->goal_inputs, feature->goal_outputs};
    am4sc::WorkflowDocument doc;
    try {
        auto candidates = am4sc::gather_candidates(registry, goal);
        doc = am4sc::serialize(am4sc::refactor_dedup(am4sc::plan(goal, candidates, am4sc::PlanConstraints{})));
    } catch (const am4sc::Error& e) {
        if (e.code() != am4sc::ErrorCode::Unsatisfiable && e.code() != am4sc::ErrorCode::NoCandidates)
            throw;
        std::cerr << "engine: " << feature_id << ": " << e.what() << '\n';
        return kFeatureFailed;
    }
    if (workflow_path.empty())
        std::cout << doc.body.dump(2) << '\n';
    else
        write_text(workflow_path, doc.body.dump(2));
    return kOk;
}

int cmd_registry_list(const std::string& scenario_path)
{
    auto registry = am4sc::build_registry(am4sc::load_scenario(scenario_path));
    for (const auto& d : registry.list()) {
        std::cout << d.id << " v" << d.version << " cost=" << d.cost << " (" << params_text(d.inputs) << ") -> ("
                  << params_text(d.outputs) << ") endpoint=" << registry.endpoint_of(d.id);
        if (!d.tags.empty()) {
            std::cout << " tags=";
            bool first = true;
            for (const auto& t : d.tags) {
                std::cout << (first ? "" : ",") << t;
                first = false;
            }
        }
        std::cout << '\n';
    }
    return kOk;
}

int cmd_check(const std::string& scenario_path, const std::string& state_path)
{
    auto state = am4sc::EngineState::from_scenario(am4sc::load_scenario(scenario_path));
    am4sc::restore_state(state, read_json(state_path));
    bool all_ok = true;
    for (const auto& [id, ok] : am4sc::integration_check(state)) {
        std::cout << id << " " << (ok ? "passing" : "FAILING") << '\n';
        all_ok = all_ok && ok;
    }
    return all_ok ? kOk : kFeatureFailed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Agile service-composition engine"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run iterations of the composition pipeline");
    run_cmd->add_option("--scenario", run.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--iterations", run.iterations, "Number of iterations")->required()->check(CLI::PositiveNumber);
    run_cmd->add_option("--feedback", run.feedback, "Feedback document")->check(CLI::ExistingFile);
    run_cmd->add_option("--capacity", run.capacity, "Features per iteration")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run.seed, "Test-generation seed (default: $AM4SC_SEED or 0)");
    run_cmd->add_option("--report", run.report, "Write the JSON report here instead of stdout");

    std::string scenario, feature, workflow, saved;
    auto* compose_cmd = app.add_subcommand("compose", "Plan one feature and print its workflow document");
    compose_cmd->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    compose_cmd->add_option("--feature", feature, "Feature id")->required();
    compose_cmd->add_option("--workflow", workflow, "Write the workflow here instead of stdout");

    auto* registry_cmd = app.add_subcommand("registry", "Registry inspection");
    registry_cmd->require_subcommand(1);
    auto* list_cmd = registry_cmd->add_subcommand("list", "List registered services in id order");
    list_cmd->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

    auto* check_cmd = app.add_subcommand("check", "Rerun delivered features' tests against current behaviors");
    check_cmd->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    check_cmd->add_option("--state", saved, "Report written by 'engine run'")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*compose_cmd)
            return cmd_compose(scenario, feature, workflow);
        if (*list_cmd)
            return cmd_registry_list(scenario);
        if (*check_cmd)
            return cmd_check(scenario, saved);
    } catch (const am4sc::Error& e) {
        std::cerr << "engine: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}
