#include "rssd/harness/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rssd/common/error.hpp"
#include "rssd/harness/prng.hpp"

namespace rssd::harness {

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& why) {
  throw Error(Errc::TraceParseError, "line " + std::to_string(line) + ": " + why, line);
}

std::uint64_t parse_u64(const std::string& token, std::size_t line, const char* field) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    parse_error(line, std::string("bad ") + field + " '" + token + "'");
  }
  try {
    return std::stoull(token);
  } catch (const std::exception&) {
    parse_error(line, std::string(field) + " out of range");
  }
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string text;
  std::size_t line = 0;
  SimTime last = 0;
  while (std::getline(in, text)) {
    ++line;
    auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;
    std::istringstream fields(text);
    std::string ts, op, lpa, len, seed, extra;
    if (!(fields >> ts >> op >> lpa >> len >> seed)) parse_error(line, "expected 5 fields");
    if (fields >> extra) parse_error(line, "unexpected trailing field '" + extra + "'");
    TraceOp o;
    o.timestamp = parse_u64(ts, line, "timestamp");
    if (op == "W") {
      o.kind = TraceOpKind::Write;
    } else if (op == "T") {
      o.kind = TraceOpKind::Trim;
    } else if (op == "R") {
      o.kind = TraceOpKind::Read;
    } else {
      parse_error(line, "unknown op '" + op + "'");
    }
    o.lpa = parse_u64(lpa, line, "lpa");
    o.length = parse_u64(len, line, "length");
    o.payload_seed = parse_u64(seed, line, "payload seed");
    if (o.length == 0) parse_error(line, "length must be >= 1");
    if (!trace.empty() && o.timestamp < last) parse_error(line, "timestamp decreases");
    last = o.timestamp;
    trace.push_back(o);
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open trace " + path.string());
  return parse_trace(in);
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << "# timestamp_ns op lpa length_pages payload_seed\n";
  for (const auto& o : trace) {
    out << o.timestamp << ' ' << static_cast<char>(o.kind) << ' ' << o.lpa << ' ' << o.length << ' '
        << o.payload_seed << '\n';
  }
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::StorageFailure, "cannot write trace " + path.string());
  write_trace(out, trace);
}

Trace generate_benign(const BenignParams& p) {
  if (p.lpa_space == 0 || p.ops_per_second <= 0.0 || p.max_length == 0) {
    throw Error(Errc::ConfigError, "benign trace needs lpa_space, max_length and ops_per_second > 0");
  }
  Prng prng(p.seed);
  Trace trace;
  trace.reserve(p.ops);
  std::uint64_t hot = std::min(p.hot_lpas, p.lpa_space);
  std::set<Lpa> written;
  double interval = static_cast<double>(kNanosPerSecond) / p.ops_per_second;
  double t = static_cast<double>(p.start);
  for (std::uint64_t i = 0; i < p.ops; ++i) {
    TraceOp o;
    o.timestamp = static_cast<SimTime>(t);
    t += interval * (0.5 + prng.unit());
    o.payload_seed = prng.next() >> 16;
    double r = prng.unit();
    if (r < p.read_fraction) {
      o.kind = TraceOpKind::Read;
      o.lpa = prng.below(p.lpa_space);
      o.length = 1;
    } else if (r < p.read_fraction + p.trim_fraction && !written.empty()) {
      o.kind = TraceOpKind::Trim;
      auto it = written.lower_bound(prng.below(p.lpa_space));
      if (it == written.end()) it = written.begin();
      o.lpa = *it;
      o.length = std::min(prng.between(1, p.max_length), p.lpa_space - o.lpa);
      written.erase(written.lower_bound(o.lpa), written.lower_bound(o.lpa + o.length));
    } else {
      o.kind = TraceOpKind::Write;
      if (hot > 0 && (hot == p.lpa_space || prng.chance(p.hot_fraction))) {
        o.lpa = prng.below(hot);
        o.length = 1;
      } else {
        o.lpa = hot + prng.below(p.lpa_space - hot);
        o.length = std::min(prng.between(1, p.max_length), p.lpa_space - o.lpa);
      }
      for (std::uint64_t k = 0; k < o.length; ++k) written.insert(o.lpa + k);
    }
    trace.push_back(o);
  }
  return trace;
}

Trace generate_fill(std::uint64_t lpa_count, SimTime start, double ops_per_second, std::uint64_t seed) {
  Trace trace;
  trace.reserve(lpa_count);
  double interval = static_cast<double>(kNanosPerSecond) / ops_per_second;
  for (std::uint64_t i = 0; i < lpa_count; ++i) {
    trace.push_back(TraceOp{start + static_cast<SimTime>(std::floor(interval * static_cast<double>(i))),
                            TraceOpKind::Write, i, 1, seed * 1'000'003ULL + i});
  }
  return trace;
}

}  // namespace rssd::harness
