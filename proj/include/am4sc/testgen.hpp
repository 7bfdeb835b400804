#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "am4sc/backlog.hpp"
#include "am4sc/expression.hpp"
#include "am4sc/types.hpp"

namespace am4sc {

/// Draw source for one parameter: a closed range [lo, hi] or a finite value list.
struct GeneratorSpec {
    struct Range {
        double lo = 0.0;
        double hi = 0.0;
    };

    Datatype datatype;
    std::optional<Range> range;
    std::vector<Value> values;
};

struct ReferenceModel {
    std::string id;
    TagSet domain_tags;
    std::map<std::string, GeneratorSpec> input_generators;
    std::map<std::string, Expression> oracle;
};

/// Throws Error(SchemaError) if the model breaks an invariant.
void validate(const ReferenceModel& m);

struct ContractTest {
    std::string id;
    std::string feature_id;
    Binding inputs;
    Binding expected;
    double tolerance = 1e-9;
    std::string origin;
    std::int64_t seed = 0;

    bool operator==(const ContractTest&) const = default;
};

inline constexpr int kDefaultTestsPerFeature = 5;
inline constexpr double kDefaultTolerance = 1e-9;

/// Models sharing at least one tag with the feature, ordered by
/// (shared tag count desc, id asc). Throws NoReferenceModel when none do.
std::vector<ReferenceModel> match_models(const FeatureRequest& feature,
                                         const std::vector<ReferenceModel>& models);

/// 64 random bits for (seed, test index, param index). Each coordinate is
/// mixed independently, so adding a parameter leaves other draws alone.
std::uint64_t draw_bits(std::int64_t seed, std::uint64_t test_index, std::uint64_t param_index);

/// Maps random bits onto a generator's domain.
Value draw_value(const GeneratorSpec& gen, std::uint64_t bits);

/// Exactly `n` tests; test i draws goal input j from draw_bits(seed, i, j),
/// with j the input's position in feature.goal_inputs.
/// Throws GeneratorGap if a goal input has no generator, OracleError if the
/// oracle cannot produce a goal output.
std::vector<ContractTest> generate_tests(const FeatureRequest& feature, const ReferenceModel& model, int n,
                                         std::int64_t seed, double tolerance = kDefaultTolerance);

json generator_to_json(const GeneratorSpec& g);
GeneratorSpec generator_from_json(const json& j);
json model_to_json(const ReferenceModel& m);
ReferenceModel model_from_json(const json& j);
std::vector<ReferenceModel> models_from_json(const json& j);

json contract_test_to_json(const ContractTest& t);
ContractTest contract_test_from_json(const json& j);
json tests_to_json(const std::vector<ContractTest>& tests);
std::vector<ContractTest> tests_from_json(const json& j);

}  // namespace am4sc
