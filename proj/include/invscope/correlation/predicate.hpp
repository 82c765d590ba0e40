#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "invscope/domain.hpp"

namespace invscope::correlation {

/// Names an Event field (`kind`, `asset`, ...) or an attribute
/// (`attributes.<key>`).
class FieldSelector {
public:
    enum class Field { Id, SourceId, Domain, OccurredAt, Kind, Asset, NativeRef, Attribute };

    static std::optional<FieldSelector> parse(std::string_view text);

    /// Text form of the field value, or nullopt when the event lacks it.
    std::optional<std::string> resolve(const Event& e) const;
    std::string text() const;

    bool operator==(const FieldSelector&) const = default;

private:
    Field field_ = Field::Kind;
    std::string attribute_;
};

enum class CompareOp { Eq, Neq, Prefix, InSet, Gte, Lte };

std::optional<CompareOp> parse_op(std::string_view text);
std::string_view to_string(CompareOp op);

struct Comparison {
    FieldSelector field;
    CompareOp op = CompareOp::Eq;
    /// One literal, or the member list for InSet.
    std::vector<AttrValue> literals;

    bool operator==(const Comparison&) const = default;
};

/// Boolean tree over comparisons. Evaluation is total: a missing field
/// makes its leaf false.
struct Predicate {
    enum class Node { Leaf, AllOf, AnyOf, Not };

    Node node = Node::Leaf;
    Comparison leaf;
    std::vector<Predicate> children;

    static Predicate compare(FieldSelector field, CompareOp op, std::vector<AttrValue> literals);
    static Predicate all_of(std::vector<Predicate> children);
    static Predicate any_of(std::vector<Predicate> children);
    static Predicate negate(Predicate child);

    bool evaluate(const Event& e) const;
    std::size_t depth() const;
    std::string describe() const;

    bool operator==(const Predicate&) const = default;
};

inline constexpr std::size_t kMaxPredicateDepth = 8;

}  // namespace invscope::correlation
