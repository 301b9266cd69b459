#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace entrank {

enum class QueryType {
  kDeclarative,
  kDefinitional,
  kManualSocial,
  kManualContentious,
  kExtendedKeyword,
  kExtendedOpposition,
  kExtendedDisapproval,
};

std::string_view to_string(QueryType type);
QueryType parse_query_type(std::string_view text);
const std::vector<QueryType>& all_query_types();

struct Query {
  std::string task;
  QueryType qtype = QueryType::kDeclarative;
  std::string text;

  bool operator==(const Query&) const = default;
};

// Material appended to (definition) or prefixed onto (keyword) a base
// definitional query.
struct Extension {
  enum class Kind { kKeyword, kDefinition };
  Kind kind = Kind::kDefinition;
  std::string text;
  QueryType result_type = QueryType::kExtendedOpposition;
};

// Keyword: "<Keyword>, <base with first letter lowercased>".
// Definition: "<base> <definition>". An empty extension returns the base.
Query compose_extended(const Query& base, const Extension& extension);

// Hypothesis strings keyed by (dataset, task, query type), loaded from the
// checked-in registry file.
class QueryRegistry {
 public:
  static QueryRegistry load(const std::filesystem::path& path);
  static QueryRegistry parse(std::string_view json_text);
  static std::filesystem::path default_path();

  const Query& get(std::string_view dataset, std::string_view task, QueryType qtype) const;
  const Query* find(std::string_view dataset, std::string_view task, QueryType qtype) const;
  bool has_dataset(std::string_view dataset) const;

  std::vector<Query> queries_for(std::string_view dataset, std::string_view task) const;
  std::size_t size() const { return queries_.size(); }

  // Definitions used to build the extended queries, by name.
  const Extension& extension(std::string_view name) const;

  // Question forms, kept for reference; never used for ranking.
  std::optional<std::string> question(std::string_view dataset, std::string_view task) const;

 private:
  std::map<std::tuple<std::string, std::string, QueryType>, Query> queries_;
  std::map<std::string, Extension, std::less<>> extensions_;
  std::map<std::pair<std::string, std::string>, std::string> questions_;
};

}  // namespace entrank
