#include "invscope/correlation/rules.hpp"

#include <set>

#include "invscope/error.hpp"

namespace invscope::correlation {

namespace {

class Compiler {
public:
    explicit Compiler(std::vector<CompileError>& errors) : errors_(errors) {}

    void error(const std::string& path, const std::string& message) { errors_.push_back({rule_id_, path, message}); }

    void set_rule(std::string id) { rule_id_ = std::move(id); }

    std::optional<Predicate> predicate(const json& j, const std::string& path, std::size_t depth)
    {
        if (depth > kMaxPredicateDepth) {
            error(path, "predicate deeper than " + std::to_string(kMaxPredicateDepth));
            return std::nullopt;
        }
        if (!j.is_object()) {
            error(path, "predicate node must be an object");
            return std::nullopt;
        }
        if (j.contains("all_of") || j.contains("any_of")) {
            const bool all = j.contains("all_of");
            const std::string key = all ? "all_of" : "any_of";
            const json& list = j.at(key);
            if (!list.is_array()) {
                error(path + "." + key, "must be an array");
                return std::nullopt;
            }
            std::vector<Predicate> children;
            bool ok = true;
            for (std::size_t i = 0; i < list.size(); ++i) {
                auto child = predicate(list[i], path + "." + key + "[" + std::to_string(i) + "]", depth + 1);
                if (child) children.push_back(std::move(*child));
                else ok = false;
            }
            if (!ok) return std::nullopt;
            return all ? Predicate::all_of(std::move(children)) : Predicate::any_of(std::move(children));
        }
        if (j.contains("not")) {
            auto child = predicate(j.at("not"), path + ".not", depth + 1);
            if (!child) return std::nullopt;
            return Predicate::negate(std::move(*child));
        }
        return leaf(j, path);
    }

    std::optional<Predicate> leaf(const json& j, const std::string& path)
    {
        bool ok = true;
        std::optional<FieldSelector> field;
        if (!j.contains("field") || !j.at("field").is_string()) {
            error(path + ".field", "missing field selector");
            ok = false;
        } else if (field = FieldSelector::parse(j.at("field").get<std::string>()); !field) {
            error(path + ".field", "unknown field selector '" + j.at("field").get<std::string>() + "'");
            ok = false;
        }
        std::optional<CompareOp> op;
        if (!j.contains("op") || !j.at("op").is_string()) {
            error(path + ".op", "missing comparison op");
            ok = false;
        } else if (op = parse_op(j.at("op").get<std::string>()); !op) {
            error(path + ".op", "unknown comparison op '" + j.at("op").get<std::string>() + "'");
            ok = false;
        }
        std::vector<AttrValue> literals;
        if (!j.contains("value")) {
            error(path + ".value", "missing literal");
            ok = false;
        } else {
            const json& v = j.at("value");
            const bool want_list = op && *op == CompareOp::InSet;
            if (want_list != v.is_array()) {
                error(path + ".value", want_list ? "in_set needs an array literal" : "literal must be a scalar");
                ok = false;
            } else {
                for (const json& item : want_list ? v : json::array({v})) {
                    if (auto lit = literal(item)) literals.push_back(std::move(*lit));
                    else {
                        error(path + ".value", "literal must be a string, integer or boolean");
                        ok = false;
                    }
                }
                if (want_list && literals.empty() && ok) {
                    error(path + ".value", "in_set needs at least one literal");
                    ok = false;
                }
            }
        }
        if (!ok) return std::nullopt;
        return Predicate::compare(*field, *op, std::move(literals));
    }

    static std::optional<AttrValue> literal(const json& v)
    {
        if (v.is_string()) return AttrValue(v.get<std::string>());
        if (v.is_boolean()) return AttrValue(v.get<bool>());
        if (v.is_number_integer()) return AttrValue(v.get<std::int64_t>());
        return std::nullopt;
    }

    std::optional<std::int64_t> integer(const json& r, const char* key, const std::string& path, std::int64_t min)
    {
        if (!r.contains(key) || !r.at(key).is_number_integer()) {
            error(path + "." + key, "must be an integer");
            return std::nullopt;
        }
        const auto v = r.at(key).get<std::int64_t>();
        if (v < min) {
            error(path + "." + key, std::string(key) + " must be >= " + std::to_string(min));
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::string> text(const json& r, const char* key, const std::string& path)
    {
        if (!r.contains(key) || !r.at(key).is_string() || r.at(key).get<std::string>().empty()) {
            error(path + "." + key, "must be a non-empty string");
            return std::nullopt;
        }
        return r.at(key).get<std::string>();
    }

    std::optional<FieldSelector> selector(const json& v, const std::string& path)
    {
        if (!v.is_string()) {
            error(path, "selector must be a string");
            return std::nullopt;
        }
        auto s = FieldSelector::parse(v.get<std::string>());
        if (!s) error(path, "unknown field selector '" + v.get<std::string>() + "'");
        return s;
    }

    std::optional<Rule> rule(const json& r, const std::string& path)
    {
        const std::size_t errors_before = errors_.size();
        Rule out;
        if (!r.is_object()) {
            error(path, "rule must be an object");
            return std::nullopt;
        }
        if (auto v = text(r, "rule_id", path)) out.rule_id = *v;
        if (auto v = text(r, "name", path)) out.name = *v;
        if (auto v = text(r, "detector", path)) out.detector = *v;
        if (auto v = text(r, "severity", path)) {
            if (auto s = parse_severity(*v)) out.severity = *s;
            else error(path + ".severity", "unknown severity '" + *v + "'");
        }
        if (!r.contains("predicate")) error(path + ".predicate", "missing predicate");
        else if (auto p = predicate(r.at("predicate"), path + ".predicate", 1)) out.predicate = std::move(*p);

        if (!r.contains("group_by") || !r.at("group_by").is_array()) {
            error(path + ".group_by", "must be an array of selectors");
        } else {
            const json& g = r.at("group_by");
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (auto s = selector(g[i], path + ".group_by[" + std::to_string(i) + "]")) out.group_by.push_back(*s);
            }
        }
        if (auto v = integer(r, "threshold", path, 1)) out.threshold = *v;
        if (auto v = integer(r, "window_seconds", path, 1)) out.window_seconds = *v;
        out.suppress_seconds = out.window_seconds;
        if (r.contains("suppress_seconds") && !r.at("suppress_seconds").is_null()) {
            if (auto v = integer(r, "suppress_seconds", path, 0)) out.suppress_seconds = *v;
        }
        if (r.contains("join") && !r.at("join").is_null()) out.join = join(r.at("join"), path + ".join");

        if (errors_.size() != errors_before) return std::nullopt;
        return out;
    }

    std::optional<JoinClause> join(const json& j, const std::string& path)
    {
        if (!j.is_object()) {
            error(path, "join must be an object");
            return std::nullopt;
        }
        JoinClause out;
        bool ok = true;
        if (!j.contains("predicate")) {
            error(path + ".predicate", "missing secondary predicate");
            ok = false;
        } else if (auto p = predicate(j.at("predicate"), path + ".predicate", 1)) {
            out.secondary = std::move(*p);
        } else {
            ok = false;
        }
        for (const char* key : {"primary_field", "secondary_field"}) {
            if (!j.contains(key)) {
                error(path + "." + key, "missing correlation field");
                ok = false;
            } else if (auto s = selector(j.at(key), path + "." + key)) {
                (std::string_view(key) == "primary_field" ? out.primary_field : out.secondary_field) = *s;
            } else {
                ok = false;
            }
        }
        if (auto v = integer(j, "max_gap_seconds", path, 1)) out.max_gap_seconds = *v;
        else ok = false;
        const std::string order = j.value("order", "primary_then_secondary");
        if (order == "primary_then_secondary") out.order = JoinOrder::PrimaryThenSecondary;
        else if (order == "any_order") out.order = JoinOrder::AnyOrder;
        else {
            error(path + ".order", "unknown join order '" + order + "'");
            ok = false;
        }
        if (!ok) return std::nullopt;
        return out;
    }

private:
    std::vector<CompileError>& errors_;
    std::string rule_id_;
};

}  // namespace

CompileResult compile_rules(std::string_view document)
{
    CompileResult result;
    Compiler c(result.errors);

    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        c.error("$", std::string("not valid JSON: ") + e.what());
        return result;
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc.at("rules").is_array()) {
        c.error("$.rules", "document must be an object with a 'rules' array");
        return result;
    }
    if (doc.contains("version") && doc.at("version").is_string()) result.version = doc.at("version").get<std::string>();

    std::set<std::string> seen;
    const json& rules = doc.at("rules");
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const json& r = rules[i];
        const std::string id = r.is_object() && r.contains("rule_id") && r.at("rule_id").is_string()
                                   ? r.at("rule_id").get<std::string>()
                                   : std::string();
        c.set_rule(id);
        const std::string path = "rules[" + std::to_string(i) + "]";
        if (!id.empty() && !seen.insert(id).second) {
            c.error(path + ".rule_id", "duplicate rule_id '" + id + "'");
            continue;
        }
        if (auto compiled = c.rule(r, path)) result.rules.push_back(std::move(*compiled));
    }
    if (!result.ok()) result.rules.clear();
    return result;
}

std::vector<Rule> default_rules()
{
    auto compiled = compile_rules(default_rules_json());
    if (!compiled.ok()) {
        throw Error(ErrorCode::InvalidInput, "built-in rule set failed to compile: " + compiled.errors.front().message);
    }
    return std::move(compiled.rules);
}

json to_json(const Predicate& p)
{
    switch (p.node) {
    case Predicate::Node::AllOf:
    case Predicate::Node::AnyOf: {
        json list = json::array();
        for (const auto& c : p.children) list.push_back(to_json(c));
        return json{{p.node == Predicate::Node::AllOf ? "all_of" : "any_of", list}};
    }
    case Predicate::Node::Not: return json{{"not", to_json(p.children.front())}};
    case Predicate::Node::Leaf: break;
    }
    json value;
    if (p.leaf.op == CompareOp::InSet) {
        value = json::array();
        for (const auto& v : p.leaf.literals) value.push_back(invscope::to_json(v));
    } else {
        value = invscope::to_json(p.leaf.literals.front());
    }
    return json{{"field", p.leaf.field.text()}, {"op", to_string(p.leaf.op)}, {"value", value}};
}

json to_json(const Rule& r)
{
    json group = json::array();
    for (const auto& g : r.group_by) group.push_back(g.text());
    json out{{"rule_id", r.rule_id},
             {"name", r.name},
             {"severity", to_string(r.severity)},
             {"detector", r.detector},
             {"predicate", to_json(r.predicate)},
             {"group_by", group},
             {"threshold", r.threshold},
             {"window_seconds", r.window_seconds},
             {"suppress_seconds", r.suppress_seconds}};
    if (r.join) {
        out["join"] = {{"predicate", to_json(r.join->secondary)},
                       {"primary_field", r.join->primary_field.text()},
                       {"secondary_field", r.join->secondary_field.text()},
                       {"max_gap_seconds", r.join->max_gap_seconds},
                       {"order", r.join->order == JoinOrder::AnyOrder ? "any_order" : "primary_then_secondary"}};
    }
    return out;
}

}  // namespace invscope::correlation
