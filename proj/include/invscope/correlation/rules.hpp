#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "invscope/codec.hpp"
#include "invscope/correlation/predicate.hpp"

namespace invscope::correlation {

enum class JoinOrder { PrimaryThenSecondary, AnyOrder };

/// Cross-pattern condition: a secondary-matching event whose
/// `secondary_field` equals `primary_field` of the primary group, within
/// `max_gap_seconds` of the primary group completing.
struct JoinClause {
    Predicate secondary;
    FieldSelector primary_field;
    FieldSelector secondary_field;
    std::int64_t max_gap_seconds = 1;
    JoinOrder order = JoinOrder::PrimaryThenSecondary;
};

struct Rule {
    std::string rule_id;
    std::string name;
    Severity severity = Severity::Info;
    std::string detector;
    Predicate predicate;
    std::vector<FieldSelector> group_by;
    std::int64_t threshold = 1;
    std::int64_t window_seconds = 1;
    std::optional<JoinClause> join;
    std::int64_t suppress_seconds = 0;
};

struct CompileError {
    std::string rule_id;
    std::string path;
    std::string message;
};

struct CompileResult {
    std::string version;
    std::vector<Rule> rules;
    std::vector<CompileError> errors;

    bool ok() const { return errors.empty(); }
};

/// Compiles a `{"rules": [...]}` document. Every error is reported, not
/// just the first; `rules` is empty when any error occurred.
CompileResult compile_rules(std::string_view document);

/// Rule file text compiled into the library (rules/default.json).
std::string_view default_rules_json();

/// Compiles default_rules_json(); throws if it fails to compile.
std::vector<Rule> default_rules();

json to_json(const Predicate& p);
json to_json(const Rule& r);

}  // namespace invscope::correlation
