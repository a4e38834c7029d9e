#include "golden.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include "pbvf/harness.hpp"

namespace pbvf::testing {

std::string test_data_path(const std::string& relative) { return std::string(PBVF_TEST_DATA_DIR) + "/" + relative; }

std::vector<GoldenTrace> load_golden(const std::string& file_name) {
  const std::string path = test_data_path("golden/" + file_name);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing golden file " + path);
  std::map<int, GoldenTrace> traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
      f.push_back(line.substr(start, pos - start));
    }
    f.push_back(line.substr(start));
    const int id = std::stoi(f[0]);
    // id, kind, action, state..., reward, terminated, truncated
    const std::size_t state_dim = f.size() - 6;
    Vector state(static_cast<Eigen::Index>(state_dim));
    for (std::size_t k = 0; k < state_dim; ++k) state[static_cast<Eigen::Index>(k)] = parse_number(f[3 + k]);
    if (f[1] == "init") {
      traces[id].init = state;
    } else {
      GoldenStep s;
      s.action = parse_number(f[2]);
      s.state = state;
      s.reward = parse_number(f[3 + state_dim]);
      s.terminated = f[4 + state_dim] == "1";
      s.truncated = f[5 + state_dim] == "1";
      traces[id].steps.push_back(std::move(s));
    }
  }
  std::vector<GoldenTrace> out;
  for (auto& kv : traces) out.push_back(std::move(kv.second));
  return out;
}

}  // namespace pbvf::testing
