#include "entrank/queries.hpp"

#include <cctype>

#include <json.hpp>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

using nlohmann::json;

namespace {

constexpr const char* kModule = "queries";

struct TypeName {
  QueryType type;
  std::string_view name;
};

constexpr TypeName kTypeNames[] = {
    {QueryType::kDeclarative, "declarative"},
    {QueryType::kDefinitional, "definitional"},
    {QueryType::kManualSocial, "manual_social"},
    {QueryType::kManualContentious, "manual_contentious"},
    {QueryType::kExtendedKeyword, "extended_keyword"},
    {QueryType::kExtendedOpposition, "extended_opposition"},
    {QueryType::kExtendedDisapproval, "extended_disapproval"},
};

}  // namespace

std::string_view to_string(QueryType type) {
  for (const auto& t : kTypeNames) {
    if (t.type == type) return t.name;
  }
  return "unknown";
}

QueryType parse_query_type(std::string_view text) {
  for (const auto& t : kTypeNames) {
    if (t.name == text) return t.type;
  }
  if (text == "decl") return QueryType::kDeclarative;
  if (text == "def") return QueryType::kDefinitional;
  config_error(kModule, "unknown query type '" + std::string(text) + "'");
}

const std::vector<QueryType>& all_query_types() {
  static const std::vector<QueryType> kAll = [] {
    std::vector<QueryType> v;
    for (const auto& t : kTypeNames) v.push_back(t.type);
    return v;
  }();
  return kAll;
}

Query compose_extended(const Query& base, const Extension& extension) {
  if (base.qtype != QueryType::kDefinitional) {
    config_error(kModule, "extensions apply to definitional queries, not '" +
                              std::string(to_string(base.qtype)) + "'");
  }
  if (extension.text.empty()) return base;

  Query out;
  out.task = base.task;
  out.qtype = extension.result_type;
  if (extension.kind == Extension::Kind::kKeyword) {
    std::string keyword = extension.text;
    keyword[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(keyword[0])));
    std::string rest = base.text;
    if (!rest.empty()) rest[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(rest[0])));
    out.text = keyword + ", " + rest;
  } else {
    out.text = base.text + " " + extension.text;
  }
  return out;
}

QueryRegistry QueryRegistry::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(kModule, std::string("registry is not valid JSON: ") + e.what());
  }

  QueryRegistry reg;
  try {
    for (const auto& q : doc.at("queries")) {
      Query query;
      const auto dataset = q.at("dataset").get<std::string>();
      query.task = q.at("task").get<std::string>();
      query.qtype = parse_query_type(q.at("qtype").get<std::string>());
      query.text = q.at("text").get<std::string>();
      if (trim(query.text).empty()) config_error(kModule, "empty query for " + dataset + "/" + query.task);
      if (query.text.find('\n') != std::string::npos) {
        config_error(kModule, "query for " + dataset + "/" + query.task + " spans several lines");
      }
      auto key = std::make_tuple(dataset, query.task, query.qtype);
      if (!reg.queries_.emplace(key, query).second) {
        config_error(kModule, "duplicate query " + dataset + "/" + query.task + "/" +
                                  std::string(to_string(query.qtype)));
      }
    }
    if (doc.contains("extensions")) {
      for (const auto& [name, e] : doc.at("extensions").items()) {
        Extension ext;
        const auto kind = e.at("kind").get<std::string>();
        if (kind == "keyword") {
          ext.kind = Extension::Kind::kKeyword;
        } else if (kind == "definition") {
          ext.kind = Extension::Kind::kDefinition;
        } else {
          config_error(kModule, "unknown extension kind '" + kind + "'");
        }
        ext.text = e.at("text").get<std::string>();
        ext.result_type = parse_query_type(e.at("result").get<std::string>());
        reg.extensions_.emplace(name, std::move(ext));
      }
    }
    if (doc.contains("questions")) {
      for (const auto& q : doc.at("questions")) {
        reg.questions_[{q.at("dataset").get<std::string>(), q.at("task").get<std::string>()}] =
            q.at("text").get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    config_error(kModule, std::string("registry schema: ") + e.what());
  }
  return reg;
}

QueryRegistry QueryRegistry::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path, kModule);
  } catch (const Error& e) {
    config_error(kModule, e.what());
  }
  return parse(text);
}

std::filesystem::path QueryRegistry::default_path() {
  return std::filesystem::path(ENTRANK_DEFAULT_DATA_DIR) / "queries.json";
}

const Query* QueryRegistry::find(std::string_view dataset, std::string_view task, QueryType qtype) const {
  auto it = queries_.find(std::make_tuple(std::string(dataset), std::string(task), qtype));
  return it == queries_.end() ? nullptr : &it->second;
}

const Query& QueryRegistry::get(std::string_view dataset, std::string_view task, QueryType qtype) const {
  const Query* q = find(dataset, task, qtype);
  if (!q) {
    config_error(kModule, "no query registered for (" + std::string(dataset) + ", " + std::string(task) +
                              ", " + std::string(to_string(qtype)) + ")");
  }
  return *q;
}

bool QueryRegistry::has_dataset(std::string_view dataset) const {
  for (const auto& [key, _] : queries_) {
    if (std::get<0>(key) == dataset) return true;
  }
  return false;
}

std::vector<Query> QueryRegistry::queries_for(std::string_view dataset, std::string_view task) const {
  std::vector<Query> out;
  for (QueryType t : all_query_types()) {
    if (const Query* q = find(dataset, task, t)) out.push_back(*q);
  }
  return out;
}

const Extension& QueryRegistry::extension(std::string_view name) const {
  auto it = extensions_.find(name);
  if (it == extensions_.end()) config_error(kModule, "unknown extension '" + std::string(name) + "'");
  return it->second;
}

std::optional<std::string> QueryRegistry::question(std::string_view dataset, std::string_view task) const {
  auto it = questions_.find({std::string(dataset), std::string(task)});
  if (it == questions_.end()) return std::nullopt;
  return it->second;
}

}  // namespace entrank
