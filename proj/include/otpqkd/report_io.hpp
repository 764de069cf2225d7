#ifndef OTPQKD_REPORT_IO_HPP
#define OTPQKD_REPORT_IO_HPP

#include <charconv>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "otpqkd/errors.hpp"
#include "otpqkd/keyrates.hpp"
#include "otpqkd/protocol.hpp"

namespace otpqkd {

/// Shortest decimal with at most 15 significant digits; locale independent.
inline std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 15);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ConfigError, "not a number: '" + text + "'");
  }
  return value;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// ---------------------------------------------------------------------------
// Rate curves.

inline constexpr const char* kCurveHeader = "param,variant,rate_raw,rate_clamped,bstep_count,alpha_star";

struct CurveRow {
  double param = 0.0;
  std::string variant;
  double rate_raw = 0.0;
  double rate_clamped = 0.0;
  std::optional<std::size_t> bstep_count;
  std::optional<double> alpha_star;

  static CurveRow from(const RatePoint& pt) {
    return {pt.channel_param, std::string(to_string(pt.variant)), pt.rate, pt.clamped(), pt.bstep_count,
            pt.alpha_star};
  }

  std::string to_csv() const {
    std::string line = format_number(param) + ',' + variant + ',' + format_number(rate_raw) + ',' +
                       format_number(rate_clamped) + ',';
    if (bstep_count) line += std::to_string(*bstep_count);
    line += ',';
    if (alpha_star) line += format_number(*alpha_star);
    return line;
  }

  static CurveRow parse(const std::string& line) {
    const auto f = split(line, ',');
    if (f.size() != 6) throw Error(ErrorCode::ConfigError, "curve row needs 6 fields");
    CurveRow row;
    row.param = parse_number(f[0]);
    row.variant = f[1];
    row.rate_raw = parse_number(f[2]);
    row.rate_clamped = parse_number(f[3]);
    if (!f[4].empty()) row.bstep_count = static_cast<std::size_t>(std::stoull(f[4]));
    if (!f[5].empty()) row.alpha_star = parse_number(f[5]);
    return row;
  }

  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

// ---------------------------------------------------------------------------
// Session reports.

/// Ordered (field, value) pairs shared by the CSV, record and JSON forms.
using Fields = std::vector<std::pair<std::string, std::string>>;

inline Fields report_fields(const std::string& row, const SessionReport& r) {
  const auto n = [](std::size_t v) { return std::to_string(v); };
  return {
      {"row", row},
      {"seed", std::to_string(r.seed)},
      {"protocol", std::string(to_string(r.protocol))},
      {"mode", std::string(to_string(r.mode))},
      {"bsteps", n(r.bstep_count)},
      {"aborted", r.aborted ? "1" : "0"},
      {"keys_match", r.keys_match ? "1" : "0"},
      {"n_test", n(r.n_test)},
      {"n_kept", n(r.n_kept)},
      {"p_Z", format_number(r.observed.p_Z)},
      {"p_X", format_number(r.observed.p_X)},
      {"p_Y", r.observed.p_Y ? format_number(*r.observed.p_Y) : ""},
      {"estimated_rate", format_number(r.estimated_rate)},
      {"blocks_even", n(r.blocks_even)},
      {"blocks_odd", n(r.blocks_odd)},
      {"odd0_count", n(r.odd0_count)},
      {"odd1_count", n(r.odd1_count)},
      {"bstep_survivors", n(r.bstep_survivors)},
      {"otp_consumed", n(r.ledger.otp_consumed)},
      {"final_even", n(r.ledger.final_even)},
      {"final_odd0", n(r.ledger.final_odd0)},
      {"final_odd1", n(r.ledger.final_odd1)},
      {"final_oneway", n(r.ledger.final_oneway)},
      {"net", std::to_string(r.ledger.net())},
      {"decode_failures", n(r.decode_failures)},
      {"ambiguous_ties", n(r.ambiguous_ties)},
      {"transcript_bytes", n(r.transcript_bytes)},
      {"empirical_net_rate", format_number(r.empirical_net_rate)},
      {"stddev_net_rate", ""},
  };
}

/// Aggregate row: per-trial columns left empty except the identifying ones.
inline Fields aggregate_fields(const BatchResult& b) {
  SessionReport blank;
  Fields f = report_fields("aggregate", blank);
  for (auto& [key, value] : f) value.clear();
  const auto set = [&](const std::string& key, std::string value) {
    for (auto& [k, v] : f) {
      if (k == key) v = std::move(value);
    }
  };
  set("row", "aggregate");
  set("seed", std::to_string(b.config.seed));
  set("protocol", std::string(to_string(b.config.protocol)));
  set("mode", std::string(to_string(b.config.mode)));
  set("bsteps", std::to_string(b.config.bstep_count));
  set("keys_match", b.all_keys_match ? "1" : "0");
  set("empirical_net_rate", format_number(b.mean_net_rate));
  set("stddev_net_rate", format_number(b.stddev_net_rate));
  return f;
}

inline std::string csv_header(const Fields& f) {
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + f[i].first;
  return line;
}

inline std::string csv_row(const Fields& f) {
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + f[i].second;
  return line;
}

/// Line-delimited `field=value` record.
inline std::string record_line(const Fields& f) {
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i].second.empty()) continue;
    if (!line.empty()) line += ' ';
    line += f[i].first + '=' + f[i].second;
  }
  return line;
}

/// JSON object; numeric fields stay numeric, empty fields are omitted.
inline std::string json_line(const Fields& f) {
  nlohmann::ordered_json j;
  for (const auto& [key, value] : f) {
    if (value.empty()) continue;
    if (key == "row" || key == "protocol" || key == "mode") {
      j[key] = value;
    } else if (key == "aborted" || key == "keys_match") {
      j[key] = value == "1";
    } else if (key == "seed") {
      j[key] = std::stoull(value);
    } else if (key == "net") {
      j[key] = std::stoll(value);
    } else if (key.starts_with("p_") || key.ends_with("rate")) {
      j[key] = parse_number(value);
    } else {
      j[key] = std::stoull(value);
    }
  }
  return j.dump();
}

}  // namespace otpqkd

#endif
