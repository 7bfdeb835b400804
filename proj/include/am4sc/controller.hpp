#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "am4sc/backlog.hpp"
#include "am4sc/planner.hpp"
#include "am4sc/registry.hpp"
#include "am4sc/runtime.hpp"
#include "am4sc/testgen.hpp"

namespace am4sc {

struct EngineConfig {
    int capacity = 3;
    int tests_per_feature = kDefaultTestsPerFeature;
    std::int64_t seed = 0;
    int max_refactor_attempts = 5;
    int max_depth = 8;
    double tolerance = kDefaultTolerance;
    /// Run the selected features' pipelines on separate threads. Reports are
    /// identical either way.
    bool parallel_features = false;
};

/// Throws Error(InvalidArgument).
void validate(const EngineConfig& c);

/// A delivered composite: the workflow and the tests it passed.
struct Delivery {
    std::string feature_id;
    int iteration = 0;
    WorkflowDocument workflow;
    std::vector<ContractTest> tests;
};

/// Everything the controller owns between iterations.
struct EngineState {
    Registry registry;
    BehaviorTable behaviors;
    std::vector<ReferenceModel> models;
    Backlog backlog;
    PolicyWeights policy;
    std::map<std::string, Delivery> deliveries;
    int iteration = 0;  // last completed iteration

    static EngineState from_scenario(const Scenario& s);
};

struct FeatureRecord {
    std::string feature_id;
    int attempts = 0;
    int replans = 0;
    FeatureStatus status = FeatureStatus::Failed;
    std::vector<TestVerdict> verdicts;
    std::optional<WorkflowDocument> workflow;
    /// Error code name, or "TestsFailed" when the attempt cap ran out.
    std::string failure_reason;
    std::string detail;
    /// Services excluded at each attempt; attempt k uses exclusions[k-1].
    std::vector<std::set<std::string>> exclusions;
};

struct IterationReport {
    int iteration = 0;
    IterationPlan plan;
    std::vector<FeatureRecord> records;
    std::vector<std::pair<std::string, bool>> regression;
};

/// Backward closure of broker queries: producers of the goal outputs, then
/// producers of their inputs not covered by the goal inputs, until nothing new
/// turns up. Ordered by (cost asc, id asc). Throws NoCandidates when no
/// service produces any goal output.
std::vector<BindingInfo> gather_candidates(const Registry& registry, const GoalSignature& goal);

/// One sprint: select, then per feature match models, generate tests,
/// resolve, plan, dedup, bind, test, and blame/replan on failure. Ends with a
/// regression rerun of earlier deliveries. Throws EmptyBacklog.
IterationReport run_iteration(EngineState& state, const EngineConfig& config);

/// Feedback handed over between iterations. `after_iteration` is the number
/// of the iteration just finished.
using FeedbackSource = std::function<std::vector<Feedback>(int after_iteration, const Backlog& backlog)>;

/// Feedback from a document, released at the first iteration boundary where
/// the referenced feature has been delivered or failed.
class FeedbackQueue {
public:
    explicit FeedbackQueue(std::vector<Feedback> pending) : pending_(std::move(pending)) {}

    std::vector<Feedback> operator()(int after_iteration, const Backlog& backlog);
    std::size_t remaining() const { return pending_.size(); }

private:
    std::vector<Feedback> pending_;
};

/// Alternates run_iteration and feedback ingestion, stopping early when
/// nothing is pending. Throws ScenarioError for feedback that cannot apply.
std::vector<IterationReport> run_project(EngineState& state, const EngineConfig& config, int iterations,
                                         const FeedbackSource& feedback = {});

/// Reruns every delivered feature's stored tests against its stored workflow
/// with the current behaviors. Ordered by feature id.
std::vector<std::pair<std::string, bool>> integration_check(const EngineState& state);

json record_to_json(const FeatureRecord& r);
json report_to_json(const IterationReport& r);

/// Full project report: iteration reports plus the deliveries and backlog, so
/// the file doubles as saved state for integration checks.
json project_to_json(const std::vector<IterationReport>& reports, const EngineState& state);

/// Restores deliveries, backlog statuses and the iteration counter from a
/// project report onto a state built from the same scenario.
/// Throws ScenarioError.
void restore_state(EngineState& state, const json& saved);

}  // namespace am4sc
