#include "invscope/correlation/predicate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "invscope/codec.hpp"

namespace invscope::correlation {

namespace {

std::optional<double> as_number(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Numeric when both sides parse as numbers, lexicographic otherwise.
int compare_values(const std::string& lhs, const std::string& rhs)
{
    const auto a = as_number(lhs);
    const auto b = as_number(rhs);
    if (a && b) return *a < *b ? -1 : (*a > *b ? 1 : 0);
    return lhs.compare(rhs) < 0 ? -1 : (lhs == rhs ? 0 : 1);
}

}  // namespace

std::optional<FieldSelector> FieldSelector::parse(std::string_view text)
{
    FieldSelector s;
    if (text == "id") s.field_ = Field::Id;
    else if (text == "source_id") s.field_ = Field::SourceId;
    else if (text == "domain") s.field_ = Field::Domain;
    else if (text == "occurred_at") s.field_ = Field::OccurredAt;
    else if (text == "kind") s.field_ = Field::Kind;
    else if (text == "asset") s.field_ = Field::Asset;
    else if (text == "native_ref") s.field_ = Field::NativeRef;
    else if (text.starts_with("attributes.") && valid_attribute_key(text.substr(11))) {
        s.field_ = Field::Attribute;
        s.attribute_ = std::string(text.substr(11));
    } else {
        return std::nullopt;
    }
    return s;
}

std::optional<std::string> FieldSelector::resolve(const Event& e) const
{
    switch (field_) {
    case Field::Id: return e.id;
    case Field::SourceId: return e.source_id;
    case Field::Domain: return std::string(to_string(e.domain));
    case Field::OccurredAt: return e.occurred_at.to_string();
    case Field::Kind: return e.kind;
    case Field::Asset: return e.asset;
    case Field::NativeRef: return e.native_ref;
    case Field::Attribute: {
        const auto it = e.attributes.find(attribute_);
        if (it == e.attributes.end()) return std::nullopt;
        return attr_to_text(it->second);
    }
    }
    return std::nullopt;
}

std::string FieldSelector::text() const
{
    switch (field_) {
    case Field::Id: return "id";
    case Field::SourceId: return "source_id";
    case Field::Domain: return "domain";
    case Field::OccurredAt: return "occurred_at";
    case Field::Kind: return "kind";
    case Field::Asset: return "asset";
    case Field::NativeRef: return "native_ref";
    case Field::Attribute: return "attributes." + attribute_;
    }
    return {};
}

std::optional<CompareOp> parse_op(std::string_view text)
{
    if (text == "eq") return CompareOp::Eq;
    if (text == "neq") return CompareOp::Neq;
    if (text == "prefix") return CompareOp::Prefix;
    if (text == "in_set") return CompareOp::InSet;
    if (text == "gte") return CompareOp::Gte;
    if (text == "lte") return CompareOp::Lte;
    return std::nullopt;
}

std::string_view to_string(CompareOp op)
{
    switch (op) {
    case CompareOp::Eq: return "eq";
    case CompareOp::Neq: return "neq";
    case CompareOp::Prefix: return "prefix";
    case CompareOp::InSet: return "in_set";
    case CompareOp::Gte: return "gte";
    case CompareOp::Lte: return "lte";
    }
    return "eq";
}

Predicate Predicate::compare(FieldSelector field, CompareOp op, std::vector<AttrValue> literals)
{
    Predicate p;
    p.node = Node::Leaf;
    p.leaf = Comparison{std::move(field), op, std::move(literals)};
    return p;
}

Predicate Predicate::all_of(std::vector<Predicate> children)
{
    Predicate p;
    p.node = Node::AllOf;
    p.children = std::move(children);
    return p;
}

Predicate Predicate::any_of(std::vector<Predicate> children)
{
    Predicate p;
    p.node = Node::AnyOf;
    p.children = std::move(children);
    return p;
}

Predicate Predicate::negate(Predicate child)
{
    Predicate p;
    p.node = Node::Not;
    p.children.push_back(std::move(child));
    return p;
}

bool Predicate::evaluate(const Event& e) const
{
    switch (node) {
    case Node::AllOf:
        return std::all_of(children.begin(), children.end(), [&](const Predicate& c) { return c.evaluate(e); });
    case Node::AnyOf:
        return std::any_of(children.begin(), children.end(), [&](const Predicate& c) { return c.evaluate(e); });
    case Node::Not: return !children.front().evaluate(e);
    case Node::Leaf: break;
    }

    const auto value = leaf.field.resolve(e);
    if (!value || leaf.literals.empty()) return false;
    const std::string lit = attr_to_text(leaf.literals.front());
    switch (leaf.op) {
    case CompareOp::Eq: return compare_values(*value, lit) == 0;
    case CompareOp::Neq: return compare_values(*value, lit) != 0;
    case CompareOp::Prefix: return value->starts_with(lit);
    case CompareOp::Gte: return compare_values(*value, lit) >= 0;
    case CompareOp::Lte: return compare_values(*value, lit) <= 0;
    case CompareOp::InSet:
        return std::any_of(leaf.literals.begin(), leaf.literals.end(),
                           [&](const AttrValue& v) { return compare_values(*value, attr_to_text(v)) == 0; });
    }
    return false;
}

std::size_t Predicate::depth() const
{
    std::size_t d = 0;
    for (const auto& c : children) d = std::max(d, c.depth());
    return d + 1;
}

std::string Predicate::describe() const
{
    auto join_children = [&](std::string_view sep) {
        std::string out = "(";
        for (std::size_t i = 0; i < children.size(); ++i) {
            if (i) out += sep;
            out += children[i].describe();
        }
        return out + ")";
    };
    switch (node) {
    case Node::AllOf: return join_children(" and ");
    case Node::AnyOf: return join_children(" or ");
    case Node::Not: return "not " + children.front().describe();
    case Node::Leaf: break;
    }
    std::string out = leaf.field.text() + " " + std::string(to_string(leaf.op)) + " ";
    if (leaf.op == CompareOp::InSet) {
        json arr = json::array();
        for (const auto& v : leaf.literals) arr.push_back(to_json(v));
        out += arr.dump();
    } else if (!leaf.literals.empty()) {
        out += to_json(leaf.literals.front()).dump();
    }
    return out;
}

}  // namespace invscope::correlation
