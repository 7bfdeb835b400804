#pragma once

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "am4sc/types.hpp"

namespace am4sc {

using TagSet = std::set<std::string>;

struct ServiceDescriptor {
    std::string id;
    std::string name;
    int version = 1;
    std::string provider;
    ParamList inputs;
    ParamList outputs;
    double cost = 0.0;
    TagSet tags;

    bool operator==(const ServiceDescriptor&) const = default;
};

/// Throws Error(InvalidDescriptor) when the descriptor breaks an invariant.
void validate(const ServiceDescriptor& d);

struct BindingInfo {
    std::string service_id;
    std::string endpoint_key;
    ServiceDescriptor descriptor;

    bool operator==(const BindingInfo&) const = default;
};

/// Capability request sent to the broker.
struct ServiceQuery {
    ParamList required_outputs;
    ParamList available_inputs;
    std::optional<TagSet> tag_filter;
};

/// Service registry and broker.
///
/// Readers may query concurrently; registration takes an exclusive lock.
/// Every list it returns is ordered by (cost asc, id asc) unless noted.
class Registry {
public:
    Registry() = default;
    Registry(const Registry& other);
    Registry& operator=(const Registry& other);

    /// Adds `d`, or replaces the visible descriptor when `d.version` is newer.
    /// Throws DuplicateId for an id already present at an equal or newer
    /// version, InvalidDescriptor when `d` is malformed.
    std::string register_service(ServiceDescriptor d);

    /// Endpoint handle handed out in BindingInfo. Defaults to the service id.
    void set_endpoint(const std::string& service_id, std::string endpoint_key);
    std::string endpoint_of(const std::string& service_id) const;

    std::optional<ServiceDescriptor> get(const std::string& id) const;

    /// All descriptors in id order.
    std::vector<ServiceDescriptor> list() const;
    std::size_t size() const;

    std::vector<ServiceDescriptor> find_producers(const TypedParam& param,
                                                  const std::optional<TagSet>& tag_filter = {}) const;

    /// Throws NoCandidates when nothing produces any required output.
    std::vector<BindingInfo> resolve(const ServiceQuery& query) const;

private:
    static bool passes(const ServiceDescriptor& d, const std::optional<TagSet>& tag_filter);
    BindingInfo bind_locked(const ServiceDescriptor& d) const;

    mutable std::shared_mutex mutex_;
    std::map<std::string, ServiceDescriptor> services_;
    std::map<std::string, std::string> endpoints_;
};

/// (cost asc, id asc).
bool cheaper(const ServiceDescriptor& a, const ServiceDescriptor& b);

json descriptor_to_json(const ServiceDescriptor& d);
ServiceDescriptor descriptor_from_json(const json& j);
/// A registry file is a JSON array of descriptors.
std::vector<ServiceDescriptor> descriptors_from_json(const json& j);

json query_to_json(const ServiceQuery& q);
ServiceQuery query_from_json(const json& j);

json binding_info_to_json(const BindingInfo& b);
BindingInfo binding_info_from_json(const json& j);

}  // namespace am4sc
