#include "ccsel/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "ccsel/errors.hpp"
#include "json.hpp"

namespace ccsel {

using nlohmann::json;

namespace {

void check_token(const std::string &tok, const std::string &where) {
  if (tok.empty()) throw DataError(where + ": empty token");
  for (char c : tok) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      throw DataError(where + ": token contains whitespace: '" + tok + "'");
    }
  }
}

WordHyp word_from_json(const json &j, const std::string &where) {
  WordHyp w;
  try {
    w.text = j.at("text").get<std::string>();
    w.am_score = j.at("am_score").get<double>();
    w.lm_score = j.at("lm_score").get<double>();
    w.duration_ms = j.at("duration_ms").get<std::int64_t>();
    w.phone_count = j.at("phone_count").get<std::int64_t>();
  } catch (const json::exception &e) {
    throw DataError(where + ": bad hypothesis word: " + e.what());
  }
  check_token(w.text, where);
  if (w.duration_ms < 1) throw DataError(where + ": duration_ms < 1");
  if (w.phone_count < 1) throw DataError(where + ": phone_count < 1");
  return w;
}

json word_to_json(const WordHyp &w) {
  return json{{"text", w.text},
              {"am_score", w.am_score},
              {"lm_score", w.lm_score},
              {"duration_ms", w.duration_ms},
              {"phone_count", w.phone_count}};
}

}  // namespace

std::vector<Utterance> load_corpus(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<Utterance> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    Utterance u;
    try {
      u.id = j.at("id").get<std::string>();
      u.reference = j.at("reference").get<std::vector<std::string>>();
      for (const auto &jw : j.at("hypothesis")) {
        u.hypothesis.push_back(word_from_json(jw, where));
      }
      if (j.contains("domain_tag")) {
        u.domain_tag = j.at("domain_tag").get<std::string>();
      }
    } catch (const DataError &) {
      throw;
    } catch (const json::exception &e) {
      throw DataError(where + ": schema violation: " + e.what());
    }
    for (const auto &tok : u.reference) check_token(tok, where);
    if (!seen.insert(u.id).second) {
      throw DataError(where + ": duplicate utterance id: " + u.id);
    }
    out.push_back(std::move(u));
  }
  return out;
}

void save_corpus(const std::vector<Utterance> &utterances,
                 const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto &u : utterances) {
    json j{{"id", u.id}, {"reference", u.reference}};
    json hyp = json::array();
    for (const auto &w : u.hypothesis) hyp.push_back(word_to_json(w));
    j["hypothesis"] = std::move(hyp);
    if (u.domain_tag) j["domain_tag"] = *u.domain_tag;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<ScoredUtterance> load_scored_pool(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scored-pool file: " + path);
  std::vector<ScoredUtterance> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    ScoredUtterance s;
    try {
      s.id = j.at("id").get<std::string>();
      s.confidence = j.at("confidence").get<double>();
      if (j.contains("accuracy")) s.accuracy = j.at("accuracy").get<double>();
      s.n_words = j.at("n_words").get<std::int64_t>();
      s.total_duration_ms = j.at("total_duration_ms").get<std::int64_t>();
    } catch (const json::exception &e) {
      throw DataError(where + ": schema violation: " + e.what());
    }
    if (s.confidence < 0.0 || s.confidence > 1.0) {
      throw DataError(where + ": confidence outside [0,1]");
    }
    if (s.accuracy && (*s.accuracy < 0.0 || *s.accuracy > 1.0)) {
      throw DataError(where + ": accuracy outside [0,1]");
    }
    if (!seen.insert(s.id).second) {
      throw DataError(where + ": duplicate utterance id: " + s.id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_scored_pool(const std::vector<ScoredUtterance> &pool,
                      const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto &s : pool) {
    json j{{"id", s.id},
           {"confidence", s.confidence},
           {"n_words", s.n_words},
           {"total_duration_ms", s.total_duration_ms}};
    if (s.accuracy) j["accuracy"] = *s.accuracy;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace ccsel
