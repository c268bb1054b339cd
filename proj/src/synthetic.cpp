#include "tagqa/synthetic.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <set>

namespace tagqa::synthetic {

namespace {

using Rng = std::mt19937_64;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  return pool[uniform(rng, 0, pool.size() - 1)];
}

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(k, n));
  return idx;
}

const std::vector<std::string> kFirstNames = {"Steve", "Robert", "Ian",   "Maria", "Anna",  "Pedro", "Li",
                                              "Omar",  "Grace",  "Tomas", "Elena", "Hugo",  "Ingrid", "Kofi",
                                              "Yuki",  "Nadia",  "Felix", "Rosa",  "Dmitri", "Aiko"};
const std::vector<std::string> kLastNames = {"Hislop", "Dunlop", "Lougher", "Silva",  "Novak",  "Okafor",
                                             "Tanaka", "Berg",   "Moreau",  "Kowal",  "Haddad", "Quinn",
                                             "Varga",  "Lind",   "Costa",   "Mensah", "Ito",    "Petrov"};
const std::vector<std::string> kPlaces = {"Scotland", "Wales",   "Ireland", "Norway", "Brazil", "Japan",
                                          "Kenya",    "Canada",  "Chile",   "Poland", "Egypt",  "Spain"};
const std::vector<std::string> kTeams = {"Honda",  "Yamaha", "Suzuki", "Ducati", "Norton", "Triumph",
                                         "Rovers", "United", "Athletic", "Wanderers", "Rangers", "City"};
const std::vector<std::string> kTitles = {"Silent River", "Broken Crown", "Night Harbor", "Glass Garden",
                                          "Iron Meadow",  "Paper Moon",   "Red Lantern",  "Winter Coast",
                                          "Hidden Valley", "Golden Field"};
const std::vector<std::string> kRoles = {"Detective", "Captain", "Doctor", "Narrator", "Teacher", "Pilot", "Mayor"};
const std::vector<std::string> kParties = {"Labour", "Liberal", "Green", "Conservative", "Independent", "Reform"};

std::string person(Rng& rng) { return pick(rng, kFirstNames) + " " + pick(rng, kLastNames); }
std::string number(Rng& rng, int lo, int hi) { return std::to_string(uniform(rng, lo, hi)); }

struct Column {
  std::string header;
  std::function<std::string(Rng&, std::size_t row)> value;
};

struct Domain {
  std::string page;
  std::vector<Column> columns;
  std::size_t key;  // entity column
};

std::vector<Domain> domains() {
  return {
      {"Grand Prix results",
       {{"Rank", [](Rng&, std::size_t r) { return std::to_string(r); }},
        {"Rider", [](Rng& g, std::size_t) { return pick(g, kPlaces) + " " + person(g); }},
        {"Team", [](Rng& g, std::size_t) { return pick(g, kTeams); }},
        {"Speed", [](Rng& g, std::size_t) { return number(g, 90, 120) + " mph"; }},
        {"Time", [](Rng& g, std::size_t) { return "1:" + number(g, 10, 59) + ":" + number(g, 10, 59); }}},
       1},
      {"Filmography",
       {{"Year", [](Rng& g, std::size_t) { return number(g, 1980, 2020); }},
        {"Title", [](Rng& g, std::size_t) { return pick(g, kTitles); }},
        {"Role", [](Rng& g, std::size_t) { return pick(g, kRoles); }},
        {"Director", [](Rng& g, std::size_t) { return person(g); }},
        {"Notes", [](Rng& g, std::size_t) { return g() % 2 ? "Nominated" : "Lead role"; }}},
       1},
      {"Election results",
       {{"Party", [](Rng& g, std::size_t) { return pick(g, kParties); }},
        {"Candidate", [](Rng& g, std::size_t) { return person(g); }},
        {"Votes", [](Rng& g, std::size_t) { return number(g, 1000, 40000); }},
        {"Share", [](Rng& g, std::size_t) { return number(g, 1, 60) + "%"; }},
        {"Change", [](Rng& g, std::size_t) { return (g() % 2 ? "+" : "-") + number(g, 1, 9); }}},
       1},
      {"Club career",
       {{"Season", [](Rng& g, std::size_t) { return number(g, 1990, 2022); }},
        {"Club", [](Rng& g, std::size_t) { return pick(g, kPlaces) + " " + pick(g, kTeams); }},
        {"Apps", [](Rng& g, std::size_t) { return number(g, 1, 40); }},
        {"Goals", [](Rng& g, std::size_t) { return number(g, 0, 30); }},
        {"League", [](Rng& g, std::size_t) { return g() % 2 ? "Premier" : "Championship"; }}},
       1},
  };
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Dataset header_match_dataset(std::size_t n, std::uint64_t seed, const std::string& id_prefix) {
  static const std::vector<std::string> headers = {"year",  "team",  "score", "city",  "country", "points",
                                                   "coach", "goals", "venue", "award", "height",  "club"};
  static const std::vector<std::string> names = {"alice", "bruno", "chen",  "dara",  "emil",  "fatima", "gus",
                                                 "hana",  "ivan",  "jules", "kemal", "lena",  "mateo",  "nora",
                                                 "oscar", "priya", "quinn", "rafa",  "sora",  "tariq"};
  static const std::vector<std::string> values = {"red",  "blue", "green", "north", "south", "east",
                                                  "west", "gold", "iron",  "stone", "river", "lake"};
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cols = uniform(rng, 3, 5);
    const std::size_t data_rows = uniform(rng, 3, 6);
    auto hidx = sample_indices(rng, headers.size(), cols);
    auto nidx = sample_indices(rng, names.size(), data_rows);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"name"};
    for (auto h : hidx) head.push_back(headers[h]);
    rows.push_back(head);
    for (std::size_t r = 0; r < data_rows; ++r) {
      std::vector<std::string> row{names[nidx[r]]};
      for (std::size_t c = 0; c < cols; ++c) row.push_back(pick(rng, values));
      rows.push_back(row);
    }
    const std::size_t target_row = uniform(rng, 1, data_rows);
    auto asked = sample_indices(rng, cols, uniform(rng, 1, 2));
    std::sort(asked.begin(), asked.end());
    QAExample ex;
    ex.id = id_prefix + "-" + std::to_string(i);
    std::string q = "what is the " + head[asked[0] + 1];
    if (asked.size() > 1) q += " and " + head[asked[1] + 1];
    q += " for " + rows[target_row][0] + "?";
    ex.question = q;
    std::string ans = rows[target_row][0] + " has";
    for (std::size_t k = 0; k < asked.size(); ++k) {
      ex.gold_cells.push_back({target_row, asked[k] + 1});
      ans += (k ? " and " : " ") + head[asked[k] + 1] + " " + rows[target_row][asked[k] + 1];
    }
    ex.answer = ans + ".";
    ex.table = Table(std::move(rows));
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset fetaqa_like_dataset(std::size_t n, std::uint64_t seed, const std::string& id_prefix) {
  const auto doms = domains();
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const Domain& d = doms[uniform(rng, 0, doms.size() - 1)];
    const std::size_t data_rows = uniform(rng, 4, 14);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head;
    for (const auto& c : d.columns) head.push_back(c.header);
    rows.push_back(head);
    std::set<std::string> used;
    for (std::size_t r = 1; r <= data_rows; ++r) {
      std::vector<std::string> row;
      for (std::size_t c = 0; c < d.columns.size(); ++c) {
        std::string v = d.columns[c].value(rng, r);
        if (c == d.key) {
          for (int tries = 0; used.count(v) && tries < 20; ++tries) v = d.columns[c].value(rng, r);
          used.insert(v);
        }
        row.push_back(v);
      }
      rows.push_back(row);
    }

    // One or two entity rows, one or two attribute columns besides the key.
    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < d.columns.size(); ++c)
      if (c != d.key) others.push_back(c);
    auto attr_pick = sample_indices(rng, others.size(), uniform(rng, 1, 2));
    std::vector<std::size_t> attrs;
    for (auto a : attr_pick) attrs.push_back(others[a]);
    std::sort(attrs.begin(), attrs.end());
    auto row_pick = sample_indices(rng, data_rows, uniform(rng, 1, 2));
    std::vector<std::size_t> target_rows;
    for (auto r : row_pick) target_rows.push_back(r + 1);
    std::sort(target_rows.begin(), target_rows.end());

    QAExample ex;
    ex.id = id_prefix + "-" + std::to_string(i);
    ex.page_title = d.page;
    ex.section_title = d.columns[d.key].header + " table";
    std::string q = "What " + lower(head[attrs[0]]);
    if (attrs.size() > 1) q += " and " + lower(head[attrs[1]]);
    q += target_rows.size() > 1 ? " did " + rows[target_rows[0]][d.key] + " and " + rows[target_rows[1]][d.key] + " have?"
                                : " did " + rows[target_rows[0]][d.key] + " have?";
    ex.question = q;

    std::vector<std::string> clauses;
    for (auto r : target_rows) {
      ex.gold_cells.push_back({r, d.key});
      std::string clause = rows[r][d.key] + " had";
      for (std::size_t k = 0; k < attrs.size(); ++k) {
        ex.gold_cells.push_back({r, attrs[k]});
        clause += (k ? " and " : " ") + lower(head[attrs[k]]) + " " + rows[r][attrs[k]];
      }
      clauses.push_back(clause);
    }
    std::sort(ex.gold_cells.begin(), ex.gold_cells.end());
    ex.answer = "In the " + lower(d.page) + ", " + join(clauses, ", while ") + ".";
    ex.table = Table(std::move(rows));
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::vector<Document> background_corpus(std::size_t n_docs, std::uint64_t seed) {
  static const std::vector<std::string> jobs = {"motorcycle racer", "film actor", "politician", "footballer",
                                                "director", "engineer"};
  static const std::vector<std::string> filler = {"The valley is known for its orchards and stone bridges.",
                                                  "The festival attracts visitors every summer.",
                                                  "The railway line was extended in the following decade.",
                                                  "Local schools teach both history and music."};
  Rng rng(seed);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n_docs; ++i) {
    Document d;
    d.id = "doc-" + std::to_string(i);
    if (i % 4 == 3) {
      d.title = pick(rng, kPlaces);
      d.text = *d.title + " is a region with a long history. " + pick(rng, filler);
    } else {
      const std::string who = pick(rng, kFirstNames) + " " + pick(rng, kLastNames);
      d.title = who;
      d.text = who + " is a " + pick(rng, jobs) + " from " + pick(rng, kPlaces) + ". " + who + " worked with " +
               pick(rng, kTeams) + " for " + number(rng, 2, 15) + " years. " + pick(rng, filler);
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace tagqa::synthetic
