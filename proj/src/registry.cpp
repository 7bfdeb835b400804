#include "am4sc/registry.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "am4sc/error.hpp"

namespace am4sc {

void validate(const ServiceDescriptor& d)
{
    if (!is_id(d.id))
        throw Error(ErrorCode::InvalidDescriptor, "bad service id '" + d.id + "'");
    check_param_list(d.inputs, ErrorCode::InvalidDescriptor, d.id + " inputs", false);
    check_param_list(d.outputs, ErrorCode::InvalidDescriptor, d.id + " outputs", true);
    if (!(d.cost >= 0.0) || !std::isfinite(d.cost))
        throw Error(ErrorCode::InvalidDescriptor, d.id + ": cost must be a finite value >= 0");
}

bool cheaper(const ServiceDescriptor& a, const ServiceDescriptor& b)
{
    if (a.cost != b.cost)
        return a.cost < b.cost;
    return a.id < b.id;
}

Registry::Registry(const Registry& other)
{
    std::shared_lock lock(other.mutex_);
    services_ = other.services_;
    endpoints_ = other.endpoints_;
}

Registry& Registry::operator=(const Registry& other)
{
    if (this != &other) {
        std::scoped_lock lock(mutex_);
        std::shared_lock other_lock(other.mutex_);
        services_ = other.services_;
        endpoints_ = other.endpoints_;
    }
    return *this;
}

std::string Registry::register_service(ServiceDescriptor d)
{
    validate(d);
    std::unique_lock lock(mutex_);
    auto it = services_.find(d.id);
    if (it != services_.end()) {
        if (d.version <= it->second.version)
            throw Error(ErrorCode::DuplicateId, "service '" + d.id + "' already registered at version " +
                                                    std::to_string(it->second.version));
        it->second = std::move(d);
        return it->first;
    }
    auto id = d.id;
    services_.emplace(id, std::move(d));
    return id;
}

void Registry::set_endpoint(const std::string& service_id, std::string endpoint_key)
{
    std::unique_lock lock(mutex_);
    endpoints_[service_id] = std::move(endpoint_key);
}

std::string Registry::endpoint_of(const std::string& service_id) const
{
    std::shared_lock lock(mutex_);
    auto it = endpoints_.find(service_id);
    return it == endpoints_.end() ? service_id : it->second;
}

std::optional<ServiceDescriptor> Registry::get(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    auto it = services_.find(id);
    if (it == services_.end())
        return std::nullopt;
    return it->second;
}

std::vector<ServiceDescriptor> Registry::list() const
{
    std::shared_lock lock(mutex_);
    std::vector<ServiceDescriptor> out;
    out.reserve(services_.size());
    for (const auto& [_, d] : services_)
        out.push_back(d);
    return out;
}

std::size_t Registry::size() const
{
    std::shared_lock lock(mutex_);
    return services_.size();
}

bool Registry::passes(const ServiceDescriptor& d, const std::optional<TagSet>& tag_filter)
{
    if (!tag_filter)
        return true;
    return std::any_of(tag_filter->begin(), tag_filter->end(),
                       [&](const std::string& t) { return d.tags.count(t) > 0; });
}

std::vector<ServiceDescriptor> Registry::find_producers(const TypedParam& param,
                                                        const std::optional<TagSet>& tag_filter) const
{
    std::shared_lock lock(mutex_);
    std::vector<ServiceDescriptor> out;
    for (const auto& [_, d] : services_) {
        if (!passes(d, tag_filter))
            continue;
        if (std::find(d.outputs.begin(), d.outputs.end(), param) != d.outputs.end())
            out.push_back(d);
    }
    std::sort(out.begin(), out.end(), cheaper);
    return out;
}

BindingInfo Registry::bind_locked(const ServiceDescriptor& d) const
{
    auto it = endpoints_.find(d.id);
    return BindingInfo{d.id, it == endpoints_.end() ? d.id : it->second, d};
}

std::vector<BindingInfo> Registry::resolve(const ServiceQuery& query) const
{
    if (query.required_outputs.empty())
        throw Error(ErrorCode::InvalidArgument, "query needs at least one required output");
    std::shared_lock lock(mutex_);
    std::vector<const ServiceDescriptor*> hits;
    for (const auto& [_, d] : services_) {
        if (!passes(d, query.tag_filter))
            continue;
        bool produces = std::any_of(query.required_outputs.begin(), query.required_outputs.end(),
                                    [&](const TypedParam& want) {
                                        return std::find(d.outputs.begin(), d.outputs.end(), want) !=
                                               d.outputs.end();
                                    });
        if (produces)
            hits.push_back(&d);
    }
    if (hits.empty())
        throw Error(ErrorCode::NoCandidates, "no registered service produces any required output");
    std::sort(hits.begin(), hits.end(), [](auto* a, auto* b) { return cheaper(*a, *b); });
    std::vector<BindingInfo> out;
    out.reserve(hits.size());
    for (const auto* d : hits)
        out.push_back(bind_locked(*d));
    return out;
}

namespace {

TagSet tags_from_json(const json& j, const char* context)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, std::string(context) + " tags must be an array");
    TagSet out;
    for (const auto& t : j) {
        if (!t.is_string())
            throw Error(ErrorCode::SchemaError, std::string(context) + " tags must be strings");
        out.insert(t.get<std::string>());
    }
    return out;
}

}  // namespace

json descriptor_to_json(const ServiceDescriptor& d)
{
    return json{{"id", d.id},
                {"name", d.name},
                {"version", d.version},
                {"provider", d.provider},
                {"inputs", params_to_json(d.inputs)},
                {"outputs", params_to_json(d.outputs)},
                {"cost", d.cost},
                {"tags", json(std::vector<std::string>(d.tags.begin(), d.tags.end()))}};
}

ServiceDescriptor descriptor_from_json(const json& j)
{
    check_object(j, {"id", "outputs"}, {"name", "version", "provider", "inputs", "cost", "tags"},
                 "service descriptor");
    ServiceDescriptor d;
    try {
        d.id = j.at("id").get<std::string>();
        d.name = j.value("name", d.id);
        d.version = j.value("version", 1);
        d.provider = j.value("provider", std::string{});
        d.cost = j.value("cost", 0.0);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("service descriptor: ") + e.what());
    }
    if (j.contains("inputs"))
        d.inputs = params_from_json(j["inputs"]);
    d.outputs = params_from_json(j["outputs"]);
    if (j.contains("tags"))
        d.tags = tags_from_json(j["tags"], "service descriptor");
    validate(d);
    return d;
}

std::vector<ServiceDescriptor> descriptors_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "registry file must be a JSON array");
    std::vector<ServiceDescriptor> out;
    for (const auto& e : j)
        out.push_back(descriptor_from_json(e));
    return out;
}

json query_to_json(const ServiceQuery& q)
{
    json filter = nullptr;
    if (q.tag_filter)
        filter = std::vector<std::string>(q.tag_filter->begin(), q.tag_filter->end());
    return json{{"required_outputs", params_to_json(q.required_outputs)},
                {"available_inputs", params_to_json(q.available_inputs)},
                {"tag_filter", filter}};
}

ServiceQuery query_from_json(const json& j)
{
    check_object(j, {"required_outputs"}, {"available_inputs", "tag_filter"}, "service query");
    ServiceQuery q;
    q.required_outputs = params_from_json(j["required_outputs"]);
    if (q.required_outputs.empty())
        throw Error(ErrorCode::SchemaError, "service query needs at least one required output");
    if (j.contains("available_inputs"))
        q.available_inputs = params_from_json(j["available_inputs"]);
    if (j.contains("tag_filter") && !j["tag_filter"].is_null())
        q.tag_filter = tags_from_json(j["tag_filter"], "service query");
    return q;
}

json binding_info_to_json(const BindingInfo& b)
{
    return json{{"service_id", b.service_id},
                {"endpoint_key", b.endpoint_key},
                {"descriptor", descriptor_to_json(b.descriptor)}};
}

BindingInfo binding_info_from_json(const json& j)
{
    check_object(j, {"service_id", "endpoint_key", "descriptor"}, {}, "binding info");
    BindingInfo b{j["service_id"].get<std::string>(), j["endpoint_key"].get<std::string>(),
                  descriptor_from_json(j["descriptor"])};
    if (b.descriptor.id != b.service_id)
        throw Error(ErrorCode::SchemaError, "binding info descriptor id does not match service_id");
    return b;
}

}  // namespace am4sc
