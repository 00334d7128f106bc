#include "erl/mdp_io.hpp"

#include <fstream>
#include <sstream>

namespace erl {

using nlohmann::json;

json to_json(const TabularMdp& mdp) {
  const Index S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  json rewards = json::array();
  json transitions = json::array();
  for (Index h = 0; h < H; ++h) {
    json rh = json::array();
    json ph = json::array();
    for (Index s = 0; s < S; ++s) {
      json rs = json::array();
      json ps = json::array();
      for (Index a = 0; a < A; ++a) {
        rs.push_back(mdp.reward(h, s, a));
        json row = json::array();
        for (Index n = 0; n < S; ++n) row.push_back(mdp.prob(h, s, a, n));
        ps.push_back(std::move(row));
      }
      rh.push_back(std::move(rs));
      ph.push_back(std::move(ps));
    }
    rewards.push_back(std::move(rh));
    transitions.push_back(std::move(ph));
  }
  return json{{"S", S},
              {"A", A},
              {"H", H},
              {"s1", mdp.initial_state},
              {"rewards", std::move(rewards)},
              {"transitions", std::move(transitions)}};
}

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw ValidationError(std::string("MDP JSON is missing field '") + name + "'");
  return doc.at(name);
}

void expect_array(const json& node, Index size, const std::string& what) {
  if (!node.is_array() || node.size() != size)
    throw ValidationError("MDP JSON field " + what + " must be an array of length " +
                          std::to_string(size));
}

}  // namespace

TabularMdp mdp_from_json(const json& doc) {
  try {
    const auto S = field(doc, "S").get<Index>();
    const auto A = field(doc, "A").get<Index>();
    const auto H = field(doc, "H").get<Index>();
    const auto s1 = field(doc, "s1").get<Index>();
    if (S == 0 || A == 0 || H == 0) throw ValidationError("S, A and H must be positive");
    TabularMdp mdp(S, A, H, s1);
    const json& rewards = field(doc, "rewards");
    const json& transitions = field(doc, "transitions");
    expect_array(rewards, H, "rewards");
    expect_array(transitions, H, "transitions");
    for (Index h = 0; h < H; ++h) {
      const std::string hs = "[" + std::to_string(h) + "]";
      expect_array(rewards[h], S, "rewards" + hs);
      expect_array(transitions[h], S, "transitions" + hs);
      for (Index s = 0; s < S; ++s) {
        const std::string ss = hs + "[" + std::to_string(s) + "]";
        expect_array(rewards[h][s], A, "rewards" + ss);
        expect_array(transitions[h][s], A, "transitions" + ss);
        for (Index a = 0; a < A; ++a) {
          mdp.rewards[h](s, a) = rewards[h][s][a].get<double>();
          const json& row = transitions[h][s][a];
          expect_array(row, S, "transitions" + ss + "[" + std::to_string(a) + "]");
          for (Index n = 0; n < S; ++n) mdp.transitions[h][a](s, n) = row[n].get<double>();
        }
      }
    }
    require_valid(mdp);
    return mdp;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed MDP JSON: ") + e.what());
  }
}

TabularMdp load_mdp(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return mdp_from_json(doc);
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
  write_text(path, to_json(mdp).dump(1) + "\n");
}

json to_json(const MarkovPolicy& pi) {
  json out = json::array();
  for (Index h = 0; h < pi.horizon(); ++h) {
    json row = json::array();
    for (Index s = 0; s < pi.num_states(); ++s) row.push_back(pi(h, s));
    out.push_back(std::move(row));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace erl
