#include "siglab/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace siglab {

void TurnSpec::validate() const {
  if (left < 0 || straight < 0 || right < 0)
    throw std::invalid_argument("turn probabilities must be >= 0");
  if (std::abs(left + straight + right - 1.0) > 1e-9)
    throw std::invalid_argument("turn probabilities must sum to 1");
}

double Scenario::effective_hard_cap() const {
  return hard_cap > 0 ? hard_cap : 10.0 * demand.generation_horizon;
}

namespace {

void routing_violations(const Network& net, const RoutingMatrix& routing,
                        const std::string& label, std::vector<std::string>& out) {
  if (routing.n_lanes() != net.lane_count()) {
    out.push_back(label + ": matrix dimension does not match lane count");
    return;
  }
  for (int l = 0; l < routing.n_lanes(); ++l) {
    for (const auto& [to, p] : routing.row(l)) {
      if (to < 0 || to >= net.lane_count()) {
        std::ostringstream m;
        m << label << ": row " << l << " targets unknown lane " << to;
        out.push_back(m.str());
      }
      if (p < 0 || p > 1 + 1e-12) {
        std::ostringstream m;
        m << label << ": entry (" << l << "," << to << ") outside [0,1]";
        out.push_back(m.str());
      }
    }
    if (routing.row_sum(l) > 1 + 1e-9) {
      std::ostringstream m;
      m << label << ": row " << l << " sum > 1";
      out.push_back(m.str());
    }
  }
}

}  // namespace

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> out = validate_network(network, &routing);
  routing_violations(network, controller_routing, "belief routing", out);
  if (!(demand.generation_horizon > 0))
    out.push_back("generation horizon must be > 0");
  if (!std::isfinite(demand.generation_horizon) && !(hard_cap > 0))
    out.push_back("hard cap must be set when the generation horizon is unbounded");
  if (hard_cap < 0) out.push_back("hard cap must be >= 0");
  if (!(service.saturation_rate > 0)) out.push_back("saturation rate must be > 0");
  if (!(service.vehicle_length > 0)) out.push_back("vehicle length must be > 0");
  if (!initial_queues.empty() &&
      static_cast<int>(initial_queues.size()) != network.lane_count())
    out.push_back("initial queue vector length does not match lane count");
  for (std::size_t i = 0; i < initial_queues.size(); ++i) {
    if (initial_queues[i] < 0) {
      std::ostringstream m;
      m << "initial queue of lane " << i << " must be >= 0";
      out.push_back(m.str());
    }
    if (demand.mode == SimMode::Stochastic &&
        initial_queues[i] != std::floor(initial_queues[i])) {
      std::ostringstream m;
      m << "initial queue of lane " << i << " must be integral in stochastic mode";
      out.push_back(m.str());
    }
  }
  for (const auto& [id, cfg] : controllers.per_junction) {
    if (id < 0 || id >= network.junction_count()) {
      std::ostringstream m;
      m << "controller override names unknown junction " << id;
      out.push_back(m.str());
    }
  }
  for (const Junction& j : network.junctions) {
    for (const std::string& v : controllers.for_junction(j.id).validate(j)) {
      std::ostringstream m;
      m << "junction " << j.id << ": " << v;
      out.push_back(m.str());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manhattan grid
// ---------------------------------------------------------------------------

namespace {

// Streets are 1-indexed in the naming scheme; the first street is narrow.
int street_width(int index0) { return index0 % 2 == 0 ? 1 : 2; }

enum class Move { Left = 0, Straight = 1, Right = 2 };

struct Destination {
  int r, c;
  Side entry;
};

// Where a movement leaving junction (r, c) from the given approach ends up.
std::optional<Destination> movement_destination(const ManhattanGrid& grid, int r,
                                                int c, Side side, Move move) {
  Destination d{r, c, Side::North};
  switch (side) {
    case Side::North:  // traffic heading south
      if (move == Move::Straight) d = {r + 1, c, Side::North};
      if (move == Move::Left) d = {r, c + 1, Side::West};
      if (move == Move::Right) d = {r, c - 1, Side::East};
      break;
    case Side::South:  // heading north
      if (move == Move::Straight) d = {r - 1, c, Side::South};
      if (move == Move::Left) d = {r, c - 1, Side::East};
      if (move == Move::Right) d = {r, c + 1, Side::West};
      break;
    case Side::East:  // heading west
      if (move == Move::Straight) d = {r, c - 1, Side::East};
      if (move == Move::Left) d = {r + 1, c, Side::North};
      if (move == Move::Right) d = {r - 1, c, Side::South};
      break;
    case Side::West:  // heading east
      if (move == Move::Straight) d = {r, c + 1, Side::West};
      if (move == Move::Left) d = {r - 1, c, Side::South};
      if (move == Move::Right) d = {r + 1, c, Side::North};
      break;
  }
  if (d.r < 0 || d.r >= grid.rows || d.c < 0 || d.c >= grid.cols)
    return std::nullopt;
  return d;
}

// Movement mass carried by each queue of an approach, keyed by Move.
std::vector<std::pair<Move, double>> queue_class_masses(const ApproachInfo& ap,
                                                        QueueRole role,
                                                        const TurnSpec& spec) {
  if (role == QueueRole::LeftPocket) return {{Move::Left, spec.left}};
  if (ap.width == 1)
    return {{Move::Straight, spec.straight}, {Move::Right, spec.right}};
  std::vector<double> split = straight_lane_split(spec.straight, spec.right, 2);
  if (role == QueueRole::Through) return {{Move::Straight, split[0]}};
  return {{Move::Straight, split[1]}, {Move::Right, spec.right}};
}

}  // namespace

std::vector<double> straight_lane_split(double p_straight, double p_right,
                                        int n_through) {
  if (n_through < 1) throw std::invalid_argument("need at least one through lane");
  std::vector<double> split(n_through, 0.0);
  if (n_through == 1) {
    split[0] = p_straight;
    return split;
  }
  // Vehicles join the least-loaded feasible lane; the outermost lane already
  // carries the right-turn flow.
  double level = (p_straight + p_right) / n_through;
  if (level >= p_right) {
    for (int i = 0; i + 1 < n_through; ++i) split[i] = level;
    split[n_through - 1] = level - p_right;
  } else {
    for (int i = 0; i + 1 < n_through; ++i)
      split[i] = p_straight / (n_through - 1);
    split[n_through - 1] = 0.0;
  }
  return split;
}

std::vector<double> entry_fractions(const ApproachInfo& approach,
                                    const TurnSpec& spec) {
  if (approach.width == 1)
    return {spec.straight + spec.right, spec.left};
  std::vector<double> split = straight_lane_split(spec.straight, spec.right, 2);
  return {split[0], split[1] + spec.right, spec.left};
}

ManhattanGrid make_manhattan_grid(int rows, int cols, double clearance_time,
                                  double sensor_range_m, double vehicle_length_m) {
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("grid needs at least 2 rows and 2 columns");
  ManhattanGrid grid;
  grid.rows = rows;
  grid.cols = cols;
  const double sensor_cap = std::floor(sensor_range_m / vehicle_length_m);

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Junction junction;
      junction.id = r * cols + c;
      junction.clearance_time = clearance_time;
      std::array<ApproachInfo, 4> approaches;
      for (int s = 0; s < 4; ++s) {
        Side side = static_cast<Side>(s);
        ApproachInfo ap;
        ap.side = side;
        ap.width = (side == Side::North || side == Side::South) ? street_width(c)
                                                                : street_width(r);
        switch (side) {
          case Side::North: ap.boundary = (r == 0); break;
          case Side::South: ap.boundary = (r == rows - 1); break;
          case Side::East: ap.boundary = (c == cols - 1); break;
          case Side::West: ap.boundary = (c == 0); break;
        }
        std::vector<QueueRole> roles;
        if (ap.width == 2) roles = {QueueRole::Through, QueueRole::ThroughRight,
                                    QueueRole::LeftPocket};
        else roles = {QueueRole::ThroughRight, QueueRole::LeftPocket};
        for (QueueRole role : roles) {
          Lane lane;
          lane.id = static_cast<int>(grid.network.lanes.size());
          lane.junction = junction.id;
          lane.sensor_cap = sensor_cap;
          grid.network.lanes.push_back(lane);
          grid.queues.push_back({junction.id, side, role});
          ap.lanes.push_back(lane.id);
          junction.lanes.push_back(lane.id);
        }
        approaches[s] = std::move(ap);
      }
      // Phases: 0 = NS through(+right), 1 = NS left, 2 = EW through(+right),
      // 3 = EW left. Orthogonal by construction.
      PhaseMatrix phases(4, static_cast<int>(junction.lanes.size()));
      for (int li = 0; li < static_cast<int>(junction.lanes.size()); ++li) {
        const auto& q = grid.queues[junction.lanes[li]];
        bool ns = (q.side == Side::North || q.side == Side::South);
        bool left = (q.role == QueueRole::LeftPocket);
        int row = ns ? (left ? 1 : 0) : (left ? 3 : 2);
        phases.set(row, li);
      }
      junction.phases = std::move(phases);
      grid.approaches.push_back(std::move(approaches));
      grid.network.junctions.push_back(std::move(junction));
    }
  }
  return grid;
}

RoutingMatrix derive_routing(const ManhattanGrid& grid, const TurnSpec& spec) {
  spec.validate();
  RoutingMatrix routing(grid.network.lane_count());
  for (int lane = 0; lane < grid.network.lane_count(); ++lane) {
    const auto& q = grid.queues[lane];
    int r = q.junction / grid.cols;
    int c = q.junction % grid.cols;
    const ApproachInfo& ap = grid.approaches[q.junction][static_cast<int>(q.side)];
    auto masses = queue_class_masses(ap, q.role, spec);
    double total = 0;
    for (const auto& [move, mass] : masses) total += mass;
    if (total <= 0) continue;
    for (const auto& [move, mass] : masses) {
      double share = mass / total;
      if (share <= 0) continue;
      auto dest = movement_destination(grid, r, c, q.side, move);
      if (!dest) continue;  // leaves the grid: row deficit
      int dj = dest->r * grid.cols + dest->c;
      const ApproachInfo& dap = grid.approaches[dj][static_cast<int>(dest->entry)];
      std::vector<double> entry = entry_fractions(dap, spec);
      for (std::size_t i = 0; i < dap.lanes.size(); ++i) {
        if (entry[i] <= 0) continue;
        int to = dap.lanes[i];
        routing.set(lane, to, routing.at(lane, to) + share * entry[i]);
      }
    }
  }
  return routing;
}

Scenario build_manhattan(int rows, int cols, double delta, const TurnSpec& spec,
                         const TurnSpec* believed_spec) {
  if (delta < 0) throw std::invalid_argument("delta must be >= 0");
  spec.validate();
  ManhattanGrid grid = make_manhattan_grid(rows, cols);

  Scenario scenario;
  // Boundary approaches inject width * delta vehicles per second, split across
  // queues by the same lane choice compiled into the routing matrix.
  for (auto& junction : grid.network.junctions) {
    const auto& approaches = grid.approaches[junction.id];
    for (const ApproachInfo& ap : approaches) {
      if (!ap.boundary) continue;
      std::vector<double> entry = entry_fractions(ap, spec);
      for (std::size_t i = 0; i < ap.lanes.size(); ++i)
        grid.network.lanes[ap.lanes[i]].arrival_rate = ap.width * delta * entry[i];
    }
  }
  scenario.routing = derive_routing(grid, spec);
  scenario.controller_routing =
      believed_spec ? derive_routing(grid, *believed_spec) : scenario.routing;
  scenario.network = std::move(grid.network);

  scenario.demand.mode = SimMode::Stochastic;
  scenario.demand.generation_horizon = 3600.0;
  scenario.service = ServiceModel{};

  ControllerConfig cfg;
  cfg.kind = ControllerKind::GpaShorted;
  cfg.gpa = GpaParams{10.0, 0.0};
  cfg.mp_duration = 10.0;
  cfg.ft_durations = {30.0, 15.0, 30.0, 15.0};  // 110 s cycle with 5 s clearances
  cfg.pf_cycle = 110.0;
  scenario.controllers.fallback = cfg;

  scenario.initial_queues.assign(scenario.network.lane_count(), 0.0);
  std::ostringstream name;
  name << "manhattan-" << rows << "x" << cols;
  scenario.meta["name"] = name.str();
  scenario.meta["base_delta"] = format_double(delta);
  return scenario;
}

Scenario build_isolated_junction(double lambda, double kappa, double t_w,
                                 double w_bar, double initial) {
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (initial < 0) throw std::invalid_argument("initial queue must be >= 0");
  Scenario scenario;
  for (int i = 0; i < 2; ++i) {
    Lane lane;
    lane.id = i;
    lane.junction = 0;
    lane.sensor_cap = kUnbounded;
    lane.arrival_rate = lambda;
    scenario.network.lanes.push_back(lane);
  }
  Junction junction;
  junction.id = 0;
  junction.lanes = {0, 1};
  junction.phases = PhaseMatrix::identity(2);
  junction.clearance_time = t_w;
  scenario.network.junctions.push_back(std::move(junction));

  scenario.routing = RoutingMatrix(2);  // all outflow leaves the network
  scenario.controller_routing = scenario.routing;
  scenario.demand.mode = SimMode::Fluid;
  scenario.demand.generation_horizon = kUnbounded;
  scenario.hard_cap = 36000.0;
  scenario.service = ServiceModel{1.0, 7.5};

  ControllerConfig cfg;
  cfg.kind = ControllerKind::GpaShorted;
  cfg.gpa = GpaParams{kappa, w_bar};
  cfg.ft_durations = {30.0, 30.0};
  scenario.controllers.fallback = cfg;

  scenario.initial_queues = {initial, 0.0};
  scenario.meta["name"] = "isolated-junction";
  return scenario;
}

// ---------------------------------------------------------------------------
// Scenario text format
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kHeader = "siglab scenario v1";

std::string format_or_inf(double v) {
  return std::isfinite(v) ? format_double(v) : "inf";
}

std::string join_durations(const std::vector<double>& values) {
  if (values.empty()) return "-";
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ",";
    out << format_double(values[i]);
  }
  return out.str();
}

void write_controller(std::ostringstream& out, const std::string& key,
                      const ControllerConfig& cfg) {
  out << "controller " << key << " kind " << to_string(cfg.kind) << " kappa "
      << format_double(cfg.gpa.kappa) << " w_bar " << format_double(cfg.gpa.w_bar)
      << " d " << format_double(cfg.mp_duration) << " ft "
      << join_durations(cfg.ft_durations) << " pf_cycle "
      << format_double(cfg.pf_cycle) << " min_green "
      << format_double(cfg.min_green) << "\n";
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream out;
  out << kHeader << "\n";
  out << "mode " << (s.demand.mode == SimMode::Fluid ? "fluid" : "stochastic")
      << "\n";
  out << "generation_horizon " << format_or_inf(s.demand.generation_horizon)
      << "\n";
  if (s.hard_cap > 0) out << "hard_cap " << format_double(s.hard_cap) << "\n";
  out << "saturation " << format_double(s.service.saturation_rate) << "\n";
  out << "vehicle_length " << format_double(s.service.vehicle_length) << "\n";
  for (const Lane& lane : s.network.lanes) {
    out << "lane " << lane.id << " junction ";
    if (lane.junction == kNoJunction) out << "-";
    else out << lane.junction;
    out << " sensor_cap " << format_or_inf(lane.sensor_cap);
    if (lane.capacity) out << " capacity " << format_double(*lane.capacity);
    if (lane.arrival_rate != 0)
      out << " arrival " << format_double(lane.arrival_rate);
    if (static_cast<int>(s.initial_queues.size()) > lane.id &&
        s.initial_queues[lane.id] != 0)
      out << " x0 " << format_double(s.initial_queues[lane.id]);
    out << "\n";
  }
  for (const Junction& j : s.network.junctions) {
    out << "junction " << j.id << " clearance " << format_double(j.clearance_time)
        << " lanes";
    for (int lane : j.lanes) out << " " << lane;
    out << "\n";
    for (int i = 0; i < j.phases.n_phases(); ++i) {
      out << "phase " << j.id << " " << i;
      for (int l = 0; l < j.phases.n_lanes(); ++l)
        if (j.phases.contains(i, l)) out << " " << j.lanes[l];
      out << "\n";
    }
  }
  for (int l = 0; l < s.routing.n_lanes(); ++l)
    for (const auto& [to, p] : s.routing.row(l))
      out << "route " << l << " " << to << " " << format_double(p) << "\n";
  if (!(s.controller_routing == s.routing)) {
    for (int l = 0; l < s.controller_routing.n_lanes(); ++l)
      for (const auto& [to, p] : s.controller_routing.row(l))
        out << "belief " << l << " " << to << " " << format_double(p) << "\n";
  }
  write_controller(out, "default", s.controllers.fallback);
  for (const auto& [id, cfg] : s.controllers.per_junction) {
    std::ostringstream key;
    key << id;
    write_controller(out, key.str(), cfg);
  }
  for (const auto& [key, value] : s.meta) out << "meta " << key << " " << value << "\n";
  return out.str();
}

std::string scenario_hash(const Scenario& scenario) {
  std::string text = serialize_scenario(scenario);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

namespace {

struct Tokenizer {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream out;
    out << "line " << line << ": " << msg;
    throw ScenarioError(out.str());
  }
  bool done() const { return pos >= tokens.size(); }
  const std::string& next(const char* what) {
    if (done()) fail(std::string("missing ") + what);
    return tokens[pos++];
  }
  long long next_int(const char* what) {
    const std::string& tok = next(what);
    long long value = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || p != tok.data() + tok.size())
      fail(std::string("expected integer for ") + what + ", got '" + tok + "'");
    return value;
  }
  double next_double(const char* what) {
    const std::string& tok = next(what);
    if (tok == "inf") return kUnbounded;
    double value = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || p != tok.data() + tok.size())
      fail(std::string("expected number for ") + what + ", got '" + tok + "'");
    return value;
  }
};

std::vector<double> parse_durations(Tokenizer& t) {
  const std::string& tok = t.next("durations");
  if (tok == "-") return {};
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= tok.size()) {
    std::size_t comma = tok.find(',', start);
    std::string piece = tok.substr(start, comma == std::string::npos
                                              ? std::string::npos
                                              : comma - start);
    double value = 0;
    auto [p, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc() || p != piece.data() + piece.size())
      t.fail("bad duration list entry '" + piece + "'");
    out.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct PhaseLine {
  int junction;
  int row;
  std::vector<int> lanes;
  int line;
};

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  s.demand.generation_horizon = 3600.0;
  std::vector<std::pair<int, Lane>> lanes;
  std::vector<Junction> junctions;
  std::vector<PhaseLine> phase_lines;
  std::vector<std::tuple<int, int, double>> routes, beliefs;
  std::map<int, double> initial;
  bool saw_header = false, saw_default_controller = false;

  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    Tokenizer t;
    t.line = line_no;
    std::istringstream ls(raw);
    std::string tok;
    while (ls >> tok) t.tokens.push_back(tok);
    if (t.tokens.empty()) continue;
    if (!saw_header) {
      if (raw != kHeader) {
        std::ostringstream m;
        m << "line " << line_no << ": expected header '" << kHeader << "'";
        throw ScenarioError(m.str());
      }
      saw_header = true;
      continue;
    }
    const std::string directive = t.next("directive");
    if (directive == "mode") {
      const std::string& value = t.next("mode");
      if (value == "fluid") s.demand.mode = SimMode::Fluid;
      else if (value == "stochastic") s.demand.mode = SimMode::Stochastic;
      else t.fail("mode must be fluid or stochastic");
    } else if (directive == "generation_horizon") {
      s.demand.generation_horizon = t.next_double("generation_horizon");
    } else if (directive == "hard_cap") {
      s.hard_cap = t.next_double("hard_cap");
    } else if (directive == "saturation") {
      s.service.saturation_rate = t.next_double("saturation");
    } else if (directive == "vehicle_length") {
      s.service.vehicle_length = t.next_double("vehicle_length");
    } else if (directive == "lane") {
      Lane lane;
      lane.id = static_cast<int>(t.next_int("lane id"));
      while (!t.done()) {
        const std::string key = t.next("lane key");
        if (key == "junction") {
          const std::string& value = t.next("junction id");
          if (value == "-") lane.junction = kNoJunction;
          else {
            int j = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), j);
            if (ec != std::errc() || p != value.data() + value.size())
              t.fail("bad junction id '" + value + "'");
            lane.junction = j;
          }
        } else if (key == "sensor_cap") lane.sensor_cap = t.next_double("sensor_cap");
        else if (key == "capacity") lane.capacity = t.next_double("capacity");
        else if (key == "arrival") lane.arrival_rate = t.next_double("arrival");
        else if (key == "x0") initial[lane.id] = t.next_double("x0");
        else t.fail("unknown lane key '" + key + "'");
      }
      lanes.emplace_back(line_no, lane);
    } else if (directive == "junction") {
      Junction j;
      j.id = static_cast<int>(t.next_int("junction id"));
      if (t.next("junction key") != "clearance") t.fail("expected 'clearance'");
      j.clearance_time = t.next_double("clearance");
      if (t.next("junction key") != "lanes") t.fail("expected 'lanes'");
      while (!t.done()) j.lanes.push_back(static_cast<int>(t.next_int("lane id")));
      junctions.push_back(std::move(j));
    } else if (directive == "phase") {
      PhaseLine p;
      p.junction = static_cast<int>(t.next_int("junction id"));
      p.row = static_cast<int>(t.next_int("phase row"));
      while (!t.done()) p.lanes.push_back(static_cast<int>(t.next_int("lane id")));
      p.line = line_no;
      phase_lines.push_back(std::move(p));
    } else if (directive == "route" || directive == "belief") {
      int from = static_cast<int>(t.next_int("from lane"));
      int to = static_cast<int>(t.next_int("to lane"));
      double p = t.next_double("fraction");
      if (directive == "route") routes.emplace_back(from, to, p);
      else beliefs.emplace_back(from, to, p);
    } else if (directive == "controller") {
      const std::string target = t.next("controller target");
      ControllerConfig cfg;
      bool saw_kind = false, saw_kappa = false, saw_wbar = false, saw_d = false,
           saw_ft = false, saw_pf = false;
      while (!t.done()) {
        const std::string key = t.next("controller key");
        if (key == "kind") {
          auto kind = controller_kind_from(t.next("controller kind"));
          if (!kind) t.fail("unknown controller kind");
          cfg.kind = *kind;
          saw_kind = true;
        } else if (key == "kappa") { cfg.gpa.kappa = t.next_double("kappa"); saw_kappa = true; }
        else if (key == "w_bar") { cfg.gpa.w_bar = t.next_double("w_bar"); saw_wbar = true; }
        else if (key == "d") { cfg.mp_duration = t.next_double("d"); saw_d = true; }
        else if (key == "ft") { cfg.ft_durations = parse_durations(t); saw_ft = true; }
        else if (key == "pf_cycle") { cfg.pf_cycle = t.next_double("pf_cycle"); saw_pf = true; }
        else if (key == "min_green") cfg.min_green = t.next_double("min_green");
        else t.fail("unknown controller key '" + key + "'");
      }
      if (!saw_kind) t.fail("controller line needs a kind");
      auto require = [&](bool seen, const char* what) {
        if (!seen)
          t.fail(std::string("controller '") + target + "' (" +
                 to_string(cfg.kind) + ") is missing " + what);
      };
      switch (cfg.kind) {
        case ControllerKind::GpaFull:
        case ControllerKind::GpaShorted:
          require(saw_kappa, "kappa");
          require(saw_wbar, "w_bar");
          break;
        case ControllerKind::MaxPressure: require(saw_d, "d"); break;
        case ControllerKind::FixedTime: require(saw_ft, "ft"); break;
        case ControllerKind::PropFair: require(saw_pf, "pf_cycle"); break;
      }
      if (target == "default") {
        s.controllers.fallback = cfg;
        saw_default_controller = true;
      } else {
        int id = 0;
        auto [p, ec] = std::from_chars(target.data(), target.data() + target.size(), id);
        if (ec != std::errc() || p != target.data() + target.size())
          t.fail("controller target must be 'default' or a junction id");
        s.controllers.per_junction[id] = cfg;
      }
    } else if (directive == "meta") {
      const std::string key = t.next("meta key");
      std::string value;
      while (!t.done()) {
        if (!value.empty()) value += " ";
        value += t.next("meta value");
      }
      s.meta[key] = value;
    } else {
      t.fail("unknown directive '" + directive + "'");
    }
  }
  if (!saw_header) throw ScenarioError("empty scenario text");
  if (!saw_default_controller)
    throw ScenarioError("scenario must declare a default controller");

  // Assemble the network; lane ids must be dense.
  s.network.lanes.resize(lanes.size());
  std::vector<bool> seen(lanes.size(), false);
  for (const auto& [line, lane] : lanes) {
    if (lane.id < 0 || lane.id >= static_cast<int>(lanes.size()) || seen[lane.id]) {
      std::ostringstream m;
      m << "line " << line << ": lane ids must be dense and unique";
      throw ScenarioError(m.str());
    }
    seen[lane.id] = true;
    s.network.lanes[lane.id] = lane;
  }
  std::sort(junctions.begin(), junctions.end(),
            [](const Junction& a, const Junction& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < junctions.size(); ++i) {
    if (junctions[i].id != static_cast<int>(i))
      throw ScenarioError("junction ids must be dense and unique");
  }
  s.network.junctions = std::move(junctions);
  std::map<int, int> phase_rows;  // junction -> max row index
  for (const auto& p : phase_lines)
    phase_rows[p.junction] = std::max(phase_rows[p.junction], p.row);
  for (auto& j : s.network.junctions) {
    auto it = phase_rows.find(j.id);
    int n_rows = it == phase_rows.end() ? 0 : it->second + 1;
    j.phases = PhaseMatrix(n_rows, static_cast<int>(j.lanes.size()));
  }
  for (const auto& p : phase_lines) {
    if (p.junction < 0 || p.junction >= s.network.junction_count()) {
      std::ostringstream m;
      m << "line " << p.line << ": phase names unknown junction " << p.junction;
      throw ScenarioError(m.str());
    }
    Junction& j = s.network.junctions[p.junction];
    for (int lane : p.lanes) {
      int local = j.local_index(lane);
      if (local < 0) {
        std::ostringstream m;
        m << "line " << p.line << ": lane " << lane << " is not incoming at junction "
          << p.junction;
        throw ScenarioError(m.str());
      }
      j.phases.set(p.row, local);
    }
  }
  s.routing = RoutingMatrix(s.network.lane_count());
  for (const auto& [from, to, p] : routes) {
    if (from < 0 || from >= s.network.lane_count())
      throw ScenarioError("route from unknown lane");
    s.routing.set(from, to, p);
  }
  if (beliefs.empty()) {
    s.controller_routing = s.routing;
  } else {
    s.controller_routing = RoutingMatrix(s.network.lane_count());
    for (const auto& [from, to, p] : beliefs) {
      if (from < 0 || from >= s.network.lane_count())
        throw ScenarioError("belief from unknown lane");
      s.controller_routing.set(from, to, p);
    }
  }
  s.initial_queues.assign(s.network.lane_count(), 0.0);
  for (const auto& [id, x0] : initial) {
    if (id >= 0 && id < s.network.lane_count()) s.initial_queues[id] = x0;
  }

  std::vector<std::string> report = s.validate();
  if (!report.empty()) {
    std::ostringstream m;
    m << "scenario failed validation:";
    for (const std::string& v : report) m << "\n  " << v;
    throw ScenarioError(m.str());
  }
  return s;
}

}  // namespace siglab
