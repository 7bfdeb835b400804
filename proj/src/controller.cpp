#include "am4sc/controller.hpp"

#include <algorithm>
#include <future>

#include "am4sc/error.hpp"

namespace am4sc {

void validate(const EngineConfig& c)
{
    if (c.capacity < 1)
        throw Error(ErrorCode::InvalidArgument, "capacity must be >= 1");
    if (c.tests_per_feature < 0)
        throw Error(ErrorCode::InvalidArgument, "tests_per_feature must be >= 0");
    if (c.max_refactor_attempts < 0)
        throw Error(ErrorCode::InvalidArgument, "max_refactor_attempts must be >= 0");
    if (c.max_depth < 1)
        throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 1");
    if (!(c.tolerance >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
}

EngineState EngineState::from_scenario(const Scenario& s)
{
    EngineState st;
    st.registry = build_registry(s);
    st.behaviors = s.behaviors;
    st.models = s.reference_models;
    st.backlog = s.backlog;
    st.policy = s.policy;
    return st;
}

std::vector<BindingInfo> gather_candidates(const Registry& registry, const GoalSignature& goal)
{
    std::map<std::string, BindingInfo> found;
    std::set<TypedParam> known(goal.inputs.begin(), goal.inputs.end());
    std::set<TypedParam> asked;
    std::vector<TypedParam> frontier;

    auto add = [&](const BindingInfo& b) {
        if (!found.emplace(b.service_id, b).second)
            return;
        for (const auto& in : b.descriptor.inputs) {
            if (!known.count(in) && asked.insert(in).second)
                frontier.push_back(in);
        }
    };

    ServiceQuery q{goal.outputs, goal.inputs, std::nullopt};
    asked.insert(goal.outputs.begin(), goal.outputs.end());
    for (const auto& b : registry.resolve(q))
        add(b);
    while (!frontier.empty()) {
        auto p = frontier.back();
        frontier.pop_back();
        for (const auto& d : registry.find_producers(p))
            add(BindingInfo{d.id, registry.endpoint_of(d.id), d});
    }

    std::vector<BindingInfo> out;
    for (auto& [_, b] : found)
        out.push_back(std::move(b));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return cheaper(a.descriptor, b.descriptor); });
    return out;
}

namespace {

struct Outcome {
    FeatureRecord record;
    std::optional<Delivery> delivery;
};

void fail(FeatureRecord& r, const Error& e)
{
    r.status = FeatureStatus::Failed;
    r.failure_reason = std::string(to_string(e.code()));
    r.detail = e.what();
}

/// The per-feature pipeline. Reads the state, never writes it.
Outcome process_feature(const EngineState& state, const EngineConfig& config, const FeatureRequest& feature,
                        int iteration)
{
    Outcome out;
    auto& rec = out.record;
    rec.feature_id = feature.id;
    GoalSignature goal{feature.goal_inputs, feature.goal_outputs};

    std::vector<ContractTest> tests;
    std::vector<BindingInfo> candidates;
    PlanConstraints constraints;
    constraints.max_depth = config.max_depth;
    CompositionModel model;
    try {
        auto models = match_models(feature, state.models);
        tests = generate_tests(feature, models.front(), config.tests_per_feature, config.seed, config.tolerance);
        candidates = gather_candidates(state.registry, goal);
        model = plan(goal, candidates, constraints);
    } catch (const Error& e) {
        // Impossible before any attempt: nothing is charged against the cap.
        fail(rec, e);
        return out;
    }

    for (;;) {
        ++rec.attempts;
        rec.exclusions.push_back(constraints.excluded_services);
        model = refactor_dedup(model);
        auto doc = serialize(model);
        rec.workflow = doc;
        try {
            auto composite = instantiate(doc, state.behaviors);
            rec.verdicts = run_tests(composite, tests);
        } catch (const Error& e) {
            fail(rec, e);
            return out;
        }

        bool all_passed = std::all_of(rec.verdicts.begin(), rec.verdicts.end(), [](const auto& v) { return v.passed; });
        if (all_passed) {
            rec.status = FeatureStatus::Delivered;
            out.delivery = Delivery{feature.id, iteration, doc, tests};
            return out;
        }

        rec.status = FeatureStatus::Failed;
        rec.failure_reason = "TestsFailed";
        auto blamed = blame(rec.verdicts, model);
        if (rec.attempts > config.max_refactor_attempts) {
            rec.detail = "tests still failing after " + std::to_string(rec.attempts) + " attempts";
            return out;
        }
        if (blamed.empty()) {
            rec.detail = "failing tests implicate no service";
            return out;
        }
        try {
            ++rec.replans;
            model = replan(goal, candidates, model, blamed, constraints);
        } catch (const Error& e) {
            fail(rec, e);
            return out;
        }
        constraints.excluded_services.insert(blamed.begin(), blamed.end());
    }
}

}  // namespace

IterationReport run_iteration(EngineState& state, const EngineConfig& config)
{
    validate(config);
    IterationReport report;
    report.iteration = state.iteration + 1;
    report.plan = select(state.backlog, config.capacity, state.policy, report.iteration);

    std::vector<const FeatureRequest*> selected;
    for (const auto& id : report.plan.selected)
        selected.push_back(find_feature(state.backlog, id));

    std::vector<Outcome> outcomes;
    if (config.parallel_features && selected.size() > 1) {
        std::vector<std::future<Outcome>> pending;
        for (const auto* f : selected) {
            pending.push_back(std::async(std::launch::async, [&state, &config, f, it = report.iteration] {
                return process_feature(state, config, *f, it);
            }));
        }
        for (auto& p : pending)
            outcomes.push_back(p.get());
    } else {
        for (const auto* f : selected)
            outcomes.push_back(process_feature(state, config, *f, report.iteration));
    }

    report.regression = integration_check(state);

    for (auto& o : outcomes) {
        auto* f = find_feature(state.backlog, o.record.feature_id);
        f->status = o.record.status;
        if (o.delivery)
            state.deliveries[f->id] = std::move(*o.delivery);
        report.records.push_back(std::move(o.record));
    }
    state.iteration = report.iteration;
    return report;
}

std::vector<Feedback> FeedbackQueue::operator()(int /*after_iteration*/, const Backlog& backlog)
{
    std::vector<Feedback> ready, later;
    for (auto& fb : pending_) {
        const auto* f = find_feature(backlog, fb.feature_id);
        bool settled = !f || f->status == FeatureStatus::Delivered || f->status == FeatureStatus::Failed;
        (settled ? ready : later).push_back(std::move(fb));
    }
    pending_ = std::move(later);
    return ready;
}

std::vector<IterationReport> run_project(EngineState& state, const EngineConfig& config, int iterations,
                                         const FeedbackSource& feedback)
{
    if (iterations < 1)
        throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
    validate(config);
    std::vector<IterationReport> reports;
    for (int i = 0; i < iterations; ++i) {
        if (progress(state.backlog).pending == 0)
            break;
        reports.push_back(run_iteration(state, config));
        if (feedback && i + 1 < iterations) {
            try {
                ingest_feedback(state.backlog, feedback(state.iteration, state.backlog));
            } catch (const Error& e) {
                throw Error(ErrorCode::ScenarioError, std::string("feedback: ") + e.what());
            }
        }
    }
    return reports;
}

std::vector<std::pair<std::string, bool>> integration_check(const EngineState& state)
{
    std::vector<std::pair<std::string, bool>> out;
    for (const auto& [id, d] : state.deliveries) {
        const auto* f = find_feature(state.backlog, id);
        if (!f || f->status != FeatureStatus::Delivered)
            continue;
        bool ok = false;
        try {
            auto composite = instantiate(d.workflow, state.behaviors);
            auto verdicts = run_tests(composite, d.tests);
            ok = std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.passed; });
        } catch (const Error&) {
            ok = false;
        }
        out.emplace_back(id, ok);
    }
    return out;
}

json record_to_json(const FeatureRecord& r)
{
    json verdicts = json::array();
    for (const auto& v : r.verdicts)
        verdicts.push_back(verdict_to_json(v));
    json exclusions = json::array();
    for (const auto& e : r.exclusions)
        exclusions.push_back(std::vector<std::string>(e.begin(), e.end()));
    return json{{"feature_id", r.feature_id},
                {"attempts", r.attempts},
                {"replans", r.replans},
                {"status", to_string(r.status)},
                {"verdicts", verdicts},
                {"workflow", r.workflow ? r.workflow->body : json(nullptr)},
                {"failure_reason", r.failure_reason.empty() ? json(nullptr) : json(r.failure_reason)},
                {"detail", r.detail},
                {"exclusions", exclusions}};
}

json report_to_json(const IterationReport& r)
{
    json records = json::array();
    for (const auto& rec : r.records)
        records.push_back(record_to_json(rec));
    json regression = json::array();
    for (const auto& [id, ok] : r.regression)
        regression.push_back(json{{"feature_id", id}, {"passing", ok}});
    return json{{"iteration", r.iteration}, {"plan", plan_to_json(r.plan)}, {"records", records}, {"regression", regression}};
}

json project_to_json(const std::vector<IterationReport>& reports, const EngineState& state)
{
    json iterations = json::array();
    for (const auto& r : reports)
        iterations.push_back(report_to_json(r));
    json deliveries = json::object();
    for (const auto& [id, d] : state.deliveries) {
        deliveries[id] = json{{"iteration", d.iteration}, {"workflow", d.workflow.body}, {"tests", tests_to_json(d.tests)}};
    }
    auto p = progress(state.backlog);
    return json{{"iterations", iterations},
                {"deliveries", deliveries},
                {"backlog", backlog_to_json(state.backlog)},
                {"last_iteration", state.iteration},
                {"progress",
                 {{"pending", p.pending},
                  {"selected", p.selected},
                  {"delivered", p.delivered},
                  {"failed", p.failed},
                  {"delivered_ratio", p.delivered_ratio}}}};
}

void restore_state(EngineState& state, const json& saved)
{
    try {
        if (!saved.is_object() || !saved.contains("deliveries") || !saved.contains("backlog"))
            throw Error(ErrorCode::SchemaError, "saved state needs 'deliveries' and 'backlog'");
        state.backlog = backlog_from_json(saved["backlog"]);
        state.deliveries.clear();
        for (const auto& [id, d] : saved["deliveries"].items()) {
            check_object(d, {"iteration", "workflow", "tests"}, {}, "delivery");
            state.deliveries[id] = Delivery{id, d["iteration"].get<int>(), WorkflowDocument{d["workflow"]},
                                            tests_from_json(d["tests"])};
            deserialize(state.deliveries[id].workflow);
        }
        state.iteration = saved.value("last_iteration", 0);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ScenarioError, std::string("saved state: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ScenarioError)
            throw;
        throw Error(ErrorCode::ScenarioError, std::string("saved state: ") + e.what());
    }
}

}  // namespace am4sc
