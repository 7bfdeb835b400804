#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "am4sc/registry.hpp"
#include "am4sc/types.hpp"

namespace am4sc {

enum class FeatureStatus { Pending, Selected, Delivered, Failed };

std::string_view to_string(FeatureStatus s);
FeatureStatus parse_feature_status(std::string_view s);

/// pending -> selected -> {delivered | failed}; failed -> pending and
/// delivered -> pending are the re-queue edges taken on rejection feedback.
bool transition_allowed(FeatureStatus from, FeatureStatus to);

struct FeatureRequest {
    std::string id;
    std::string title;
    std::string description;
    int customer_priority = 5;
    TagSet tags;
    ParamList goal_inputs;
    ParamList goal_outputs;
    FeatureStatus status = FeatureStatus::Pending;

    bool operator==(const FeatureRequest&) const = default;
};

/// Throws Error(InvalidFeature).
void validate(const FeatureRequest& f);

using Backlog = std::vector<FeatureRequest>;

struct PolicyWeights {
    std::map<std::string, double> tag_weights;
    double alpha = 0.5;
};

/// Throws Error(InvalidArgument) unless every weight and alpha lie in [0,1].
void validate(const PolicyWeights& p);

struct IterationPlan {
    int iteration = 1;
    std::vector<std::string> selected;
    std::vector<std::string> deferred;
    std::map<std::string, double> scores;
};

struct Feedback {
    std::string feature_id;
    bool accepted = true;
    std::optional<int> new_priority;
    std::vector<FeatureRequest> new_requests;
};

struct Progress {
    std::size_t pending = 0;
    std::size_t selected = 0;
    std::size_t delivered = 0;
    std::size_t failed = 0;
    double delivered_ratio = 0.0;

    std::size_t total() const { return pending + selected + delivered + failed; }
};

/// Customer priority blended with company policy:
///   alpha * priority/10 + (1 - alpha) * min(1, sum of weights of carried tags)
double score(const FeatureRequest& feature, const PolicyWeights& policy);

/// Top `capacity` ids by score descending, ties by id ascending. This is the
/// comparison layer select() is built on.
std::vector<std::string> top_by_score(const std::map<std::string, double>& scores, int capacity);

/// Picks the next iteration's features and marks them selected.
/// Throws EmptyBacklog when nothing is pending.
IterationPlan select(Backlog& backlog, int capacity, const PolicyWeights& policy, int iteration);

/// Applies customer feedback. Accepted features keep their status; rejected
/// ones go back to pending with the new priority, and new requests are
/// appended as pending. All-or-nothing: on error the backlog is unchanged.
void ingest_feedback(Backlog& backlog, const std::vector<Feedback>& feedbacks);

Progress progress(const Backlog& backlog);

FeatureRequest* find_feature(Backlog& backlog, std::string_view id);
const FeatureRequest* find_feature(const Backlog& backlog, std::string_view id);

json feature_to_json(const FeatureRequest& f);
FeatureRequest feature_from_json(const json& j);
json backlog_to_json(const Backlog& b);
Backlog backlog_from_json(const json& j);

json policy_to_json(const PolicyWeights& p);
PolicyWeights policy_from_json(const json& j);

json feedback_to_json(const Feedback& f);
Feedback feedback_from_json(const json& j);
std::vector<Feedback> feedbacks_from_json(const json& j);

json plan_to_json(const IterationPlan& p);

}  // namespace am4sc
