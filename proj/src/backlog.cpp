#include "am4sc/backlog.hpp"

#include <algorithm>
#include <set>

#include "am4sc/error.hpp"

namespace am4sc {

std::string_view to_string(FeatureStatus s)
{
    switch (s) {
    case FeatureStatus::Pending: return "pending";
    case FeatureStatus::Selected: return "selected";
    case FeatureStatus::Delivered: return "delivered";
    case FeatureStatus::Failed: return "failed";
    }
    return "?";
}

FeatureStatus parse_feature_status(std::string_view s)
{
    if (s == "pending")
        return FeatureStatus::Pending;
    if (s == "selected")
        return FeatureStatus::Selected;
    if (s == "delivered")
        return FeatureStatus::Delivered;
    if (s == "failed")
        return FeatureStatus::Failed;
    throw Error(ErrorCode::SchemaError, "unknown feature status '" + std::string(s) + "'");
}

bool transition_allowed(FeatureStatus from, FeatureStatus to)
{
    using S = FeatureStatus;
    switch (from) {
    case S::Pending: return to == S::Selected;
    case S::Selected: return to == S::Delivered || to == S::Failed;
    case S::Delivered: return to == S::Pending;
    case S::Failed: return to == S::Pending;
    }
    return false;
}

void validate(const FeatureRequest& f)
{
    if (!is_id(f.id))
        throw Error(ErrorCode::InvalidFeature, "bad feature id '" + f.id + "'");
    if (f.customer_priority < 1 || f.customer_priority > 10)
        throw Error(ErrorCode::InvalidFeature, f.id + ": customer_priority must be in [1,10]");
    check_param_list(f.goal_inputs, ErrorCode::InvalidFeature, f.id + " goal_inputs", false);
    check_param_list(f.goal_outputs, ErrorCode::InvalidFeature, f.id + " goal_outputs", true);
}

void validate(const PolicyWeights& p)
{
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(p.alpha))
        throw Error(ErrorCode::InvalidArgument, "policy alpha must be in [0,1]");
    for (const auto& [tag, w] : p.tag_weights) {
        if (!unit(w))
            throw Error(ErrorCode::InvalidArgument, "policy weight for '" + tag + "' must be in [0,1]");
    }
}

double score(const FeatureRequest& feature, const PolicyWeights& policy)
{
    double policy_score = 0.0;
    for (const auto& tag : feature.tags) {
        auto it = policy.tag_weights.find(tag);
        if (it != policy.tag_weights.end())
            policy_score += it->second;
    }
    policy_score = std::min(1.0, policy_score);
    return policy.alpha * (feature.customer_priority / 10.0) + (1.0 - policy.alpha) * policy_score;
}

std::vector<std::string> top_by_score(const std::map<std::string, double>& scores, int capacity)
{
    std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (const auto& [id, _] : ranked) {
        if (static_cast<int>(out.size()) >= capacity)
            break;
        out.push_back(id);
    }
    return out;
}

IterationPlan select(Backlog& backlog, int capacity, const PolicyWeights& policy, int iteration)
{
    if (capacity < 1)
        throw Error(ErrorCode::InvalidArgument, "capacity must be >= 1");
    validate(policy);
    IterationPlan plan;
    plan.iteration = iteration;
    for (const auto& f : backlog) {
        if (f.status == FeatureStatus::Pending)
            plan.scores.emplace(f.id, score(f, policy));
    }
    if (plan.scores.empty())
        throw Error(ErrorCode::EmptyBacklog, "no pending features");

    // scores is keyed by id, so the stable sort leaves ties in id order.
    plan.selected = top_by_score(plan.scores, capacity);
    std::set<std::string> chosen(plan.selected.begin(), plan.selected.end());
    for (const auto& [id, _] : plan.scores) {
        if (!chosen.count(id))
            plan.deferred.push_back(id);
    }
    for (auto& f : backlog) {
        if (chosen.count(f.id))
            f.status = FeatureStatus::Selected;
    }
    return plan;
}

FeatureRequest* find_feature(Backlog& backlog, std::string_view id)
{
    auto it = std::find_if(backlog.begin(), backlog.end(), [&](const auto& f) { return f.id == id; });
    return it == backlog.end() ? nullptr : &*it;
}

const FeatureRequest* find_feature(const Backlog& backlog, std::string_view id)
{
    auto it = std::find_if(backlog.begin(), backlog.end(), [&](const auto& f) { return f.id == id; });
    return it == backlog.end() ? nullptr : &*it;
}

void ingest_feedback(Backlog& backlog, const std::vector<Feedback>& feedbacks)
{
    Backlog next = backlog;
    std::set<std::string> ids;
    for (const auto& f : next)
        ids.insert(f.id);

    for (const auto& fb : feedbacks) {
        auto* feature = find_feature(next, fb.feature_id);
        if (!feature)
            throw Error(ErrorCode::UnknownFeature, "feedback references unknown feature '" + fb.feature_id + "'");
        if (feature->status == FeatureStatus::Pending || feature->status == FeatureStatus::Selected)
            throw Error(ErrorCode::InvalidTransition, "feedback on " + fb.feature_id + " while it is " +
                                                          std::string(to_string(feature->status)));
        if (fb.new_priority && (*fb.new_priority < 1 || *fb.new_priority > 10))
            throw Error(ErrorCode::InvalidFeature, "new_priority must be in [1,10]");
        if (!fb.accepted) {
            feature->status = FeatureStatus::Pending;
            if (fb.new_priority)
                feature->customer_priority = *fb.new_priority;
        }
        for (auto req : fb.new_requests) {
            validate(req);
            if (!ids.insert(req.id).second)
                throw Error(ErrorCode::DuplicateId, "new request id '" + req.id + "' already in backlog");
            req.status = FeatureStatus::Pending;
            next.push_back(std::move(req));
        }
    }
    backlog = std::move(next);
}

Progress progress(const Backlog& backlog)
{
    Progress p;
    for (const auto& f : backlog) {
        switch (f.status) {
        case FeatureStatus::Pending: ++p.pending; break;
        case FeatureStatus::Selected: ++p.selected; break;
        case FeatureStatus::Delivered: ++p.delivered; break;
        case FeatureStatus::Failed: ++p.failed; break;
        }
    }
    if (!backlog.empty())
        p.delivered_ratio = static_cast<double>(p.delivered) / static_cast<double>(backlog.size());
    return p;
}

json feature_to_json(const FeatureRequest& f)
{
    return json{{"id", f.id},
                {"title", f.title},
                {"description", f.description},
                {"customer_priority", f.customer_priority},
                {"tags", std::vector<std::string>(f.tags.begin(), f.tags.end())},
                {"goal_inputs", params_to_json(f.goal_inputs)},
                {"goal_outputs", params_to_json(f.goal_outputs)},
                {"status", to_string(f.status)}};
}

FeatureRequest feature_from_json(const json& j)
{
    check_object(j, {"id", "customer_priority", "goal_outputs"},
                 {"title", "description", "tags", "goal_inputs", "status"}, "feature request");
    FeatureRequest f;
    try {
        f.id = j["id"].get<std::string>();
        f.title = j.value("title", std::string{});
        f.description = j.value("description", std::string{});
        f.customer_priority = j["customer_priority"].get<int>();
        if (j.contains("tags")) {
            for (const auto& t : j["tags"])
                f.tags.insert(t.get<std::string>());
        }
        if (j.contains("status"))
            f.status = parse_feature_status(j["status"].get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("feature request: ") + e.what());
    }
    if (j.contains("goal_inputs"))
        f.goal_inputs = params_from_json(j["goal_inputs"]);
    f.goal_outputs = params_from_json(j["goal_outputs"]);
    validate(f);
    return f;
}

json backlog_to_json(const Backlog& b)
{
    json out = json::array();
    for (const auto& f : b)
        out.push_back(feature_to_json(f));
    return out;
}

Backlog backlog_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "backlog must be a JSON array");
    Backlog out;
    std::set<std::string> ids;
    for (const auto& e : j) {
        out.push_back(feature_from_json(e));
        if (!ids.insert(out.back().id).second)
            throw Error(ErrorCode::DuplicateId, "feature id '" + out.back().id + "' appears twice");
    }
    return out;
}

json policy_to_json(const PolicyWeights& p)
{
    return json{{"alpha", p.alpha}, {"tag_weights", p.tag_weights}};
}

PolicyWeights policy_from_json(const json& j)
{
    check_object(j, {}, {"alpha", "tag_weights"}, "policy");
    PolicyWeights p;
    try {
        p.alpha = j.value("alpha", p.alpha);
        if (j.contains("tag_weights"))
            p.tag_weights = j["tag_weights"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("policy: ") + e.what());
    }
    validate(p);
    return p;
}

json feedback_to_json(const Feedback& f)
{
    json out{{"feature_id", f.feature_id},
             {"accepted", f.accepted},
             {"new_priority", f.new_priority ? json(*f.new_priority) : json(nullptr)},
             {"new_requests", backlog_to_json(f.new_requests)}};
    return out;
}

Feedback feedback_from_json(const json& j)
{
    check_object(j, {"feature_id", "accepted"}, {"new_priority", "new_requests"}, "feedback");
    Feedback f;
    try {
        f.feature_id = j["feature_id"].get<std::string>();
        f.accepted = j["accepted"].get<bool>();
        if (j.contains("new_priority") && !j["new_priority"].is_null())
            f.new_priority = j["new_priority"].get<int>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("feedback: ") + e.what());
    }
    if (f.new_priority && (*f.new_priority < 1 || *f.new_priority > 10))
        throw Error(ErrorCode::SchemaError, "feedback new_priority must be in [1,10]");
    if (j.contains("new_requests"))
        f.new_requests = backlog_from_json(j["new_requests"]);
    return f;
}

std::vector<Feedback> feedbacks_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "feedback document must be a JSON array");
    std::vector<Feedback> out;
    for (const auto& e : j)
        out.push_back(feedback_from_json(e));
    return out;
}

json plan_to_json(const IterationPlan& p)
{
    return json{{"iteration", p.iteration}, {"selected", p.selected}, {"deferred", p.deferred}, {"scores", p.scores}};
}

}  // namespace am4sc
