#include "dpmnl/environment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dpmnl {

void EnvSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("env: d < 1");
  if (horizon < 1) throw std::invalid_argument("env: T < 1");
  if (replay_path.empty()) {
    if (num_items < 1) throw std::invalid_argument("env: N < 1");
    if (assortment_size < 1 || assortment_size > num_items) {
      throw std::invalid_argument("env: need 1 <= K <= N");
    }
  }
  if (theta_mode == ThetaStarMode::kFixed && theta_fixed.size() != dim) {
    throw std::invalid_argument("env: theta_star length != d");
  }
  if (revenue_mode == RevenueMode::kVector &&
      revenues_fixed.size() != num_items) {
    throw std::invalid_argument("env: revenues length != N");
  }
  if (revenue_mode == RevenueMode::kVector) {
    for (int i = 0; i < revenues_fixed.size(); ++i) {
      if (std::abs(revenues_fixed[i]) > 1.0) {
        throw std::invalid_argument("env: |revenue| > 1 at item " +
                                    std::to_string(i));
      }
    }
  }
}

Environment::Environment(const EnvSpec& spec, const RngStream& stream)
    : spec_(spec), stream_(stream) {
  spec_.validate();
  if (!spec_.replay_path.empty()) {
    throw std::invalid_argument(
        "env: replay spec requires the replay-log constructor");
  }
  Vector theta(spec_.dim);
  if (spec_.theta_mode == ThetaStarMode::kFixed) {
    theta = spec_.theta_fixed;
  } else {
    for (int i = 0; i < spec_.dim; ++i) theta[i] = stream_.uniform01();
    if (spec_.context_mode == ContextMode::kNormalized) {
      theta /= std::max(1.0, theta.norm());
    }
  }
  theta_star_.theta = theta;
}

Environment::Environment(const EnvSpec& spec, ReplayLog replay,
                         const RngStream& stream)
    : spec_(spec), replay_(std::move(replay)), stream_(stream) {
  spec_.validate();
  if (replay_.blocks.empty()) {
    throw std::invalid_argument("env: replay log has no rounds");
  }
  if (replay_.dim != spec_.dim) {
    throw std::invalid_argument("env: replay feature dimension " +
                                std::to_string(replay_.dim) +
                                " != configured d");
  }
  for (const ReplayBlock& b : replay_.blocks) {
    if (static_cast<int>(b.items.size()) < spec_.assortment_size) {
      throw std::invalid_argument(
          "env: a replay round has fewer items than K");
    }
  }
  if (spec_.theta_mode != ThetaStarMode::kFixed) {
    throw std::invalid_argument(
        "env: replay mode needs a fixed theta_star (use fit-ground-truth)");
  }
  theta_star_.theta = spec_.theta_fixed;
}

RoundContext Environment::next_round() {
  RoundContext ctx;
  ctx.round_index = ++t_;

  if (!replay_.blocks.empty()) {
    // Resample logged rounds uniformly with replacement.
    const auto& block =
        replay_.blocks[stream_.uniform_below(replay_.blocks.size())];
    ctx.items = block.items;
    ctx.revenues = block.revenues;
    return ctx;
  }

  ctx.items.reserve(spec_.num_items);
  for (int i = 0; i < spec_.num_items; ++i) {
    Vector x(spec_.dim);
    for (int j = 0; j < spec_.dim; ++j) x[j] = stream_.normal();
    if (spec_.context_mode == ContextMode::kNormalized) {
      x /= std::max(1.0, x.norm());
    }
    ctx.items.push_back(std::move(x));
  }
  if (spec_.revenue_mode == RevenueMode::kUniformOne) {
    ctx.revenues = Vector::Ones(spec_.num_items);
  } else {
    ctx.revenues = spec_.revenues_fixed;
  }
  return ctx;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void parse_fail(const std::string& path, long line_no,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

ReplayLog load_replay_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay file: " + path);

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty replay file");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "t" || header[1] != "item_id") {
    parse_fail(path, line_no,
               "expected header t,item_id,f1..fd,revenue[,chosen]");
  }
  bool has_chosen = header.back() == "chosen";
  const int d = static_cast<int>(header.size()) - 3 - (has_chosen ? 1 : 0);
  if (d < 1) parse_fail(path, line_no, "no feature columns found");
  for (int j = 0; j < d; ++j) {
    if (header[2 + j] != "f" + std::to_string(j + 1)) {
      parse_fail(path, line_no, "feature columns must be named f1..fd");
    }
  }

  ReplayLog log;
  log.dim = d;
  log.has_outcomes = has_chosen;
  std::string current_t;
  std::vector<double> revenue_buf;
  std::vector<int> chosen_buf;
  auto flush_block = [&](long at_line) {
    if (current_t.empty()) return;
    ReplayBlock& b = log.blocks.back();
    b.revenues = Eigen::Map<Vector>(revenue_buf.data(), revenue_buf.size());
    b.chosen = chosen_buf;
    int picks = 0;
    for (int c : chosen_buf) picks += c;
    if (has_chosen && picks > 1) {
      parse_fail(path, at_line, "round " + current_t +
                                    " marks more than one chosen item");
    }
    revenue_buf.clear();
    chosen_buf.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 3 + d + (has_chosen ? 1 : 0)) {
      parse_fail(path, line_no, "expected " +
                                    std::to_string(3 + d + (has_chosen ? 1 : 0)) +
                                    " fields, got " +
                                    std::to_string(fields.size()));
    }
    try {
      if (fields[0] != current_t) {
        flush_block(line_no - 1);
        current_t = fields[0];
        log.blocks.emplace_back();
      }
      Vector x(d);
      for (int j = 0; j < d; ++j) x[j] = std::stod(fields[2 + j]);
      log.blocks.back().items.push_back(std::move(x));
      revenue_buf.push_back(std::stod(fields[2 + d]));
      chosen_buf.push_back(has_chosen ? std::stoi(fields[3 + d]) : 0);
    } catch (const std::invalid_argument&) {
      parse_fail(path, line_no, "non-numeric field");
    } catch (const std::out_of_range&) {
      parse_fail(path, line_no, "numeric field out of range");
    }
  }
  flush_block(line_no);
  if (log.blocks.empty()) {
    throw std::runtime_error(path + ": replay file has a header but no rows");
  }
  return log;
}

}  // namespace dpmnl
