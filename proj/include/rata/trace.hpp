#pragma once

// Per-cycle trace records and the tab-separated trace file format:
//
//   # construction=rata_a
//   # layout ar_min=0x0100 ar_max=0x013f ...
//   cycle  pc  r_en  w_en  d_addr  dma_en  dma_addr  irq  reset  set_lmt  up_lmt  fsm_state
//
// Addresses are hex without prefix; every other numeric column is decimal.

#include <rata/common.hpp>
#include <rata/config.hpp>
#include <rata/memory.hpp>
#include <rata/monitor.hpp>

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rata {

struct trace_step {
  signal_state signals;
  monitor_outputs outputs;
  std::string fsm_state;
  // Derived from `signals` against the layout.
  bool mod_ar = false;
  bool mod_lmt = false;
  bool pc_cr_auth = false;
  bool pc_cr_max = false;

  friend bool operator==(const trace_step&, const trace_step&) = default;
};

using trace = std::vector<trace_step>;

inline trace_step make_step(const memory_map& map, const signal_state& s, const monitor_outputs& out,
                            std::string_view fsm) {
  trace_step t;
  t.signals = s;
  t.outputs = out;
  t.fsm_state = std::string(fsm);
  t.mod_ar = mod_mem(s, map.ar);
  t.mod_lmt = mod_mem(s, map.lmt);
  t.pc_cr_auth = s.pc == map.cr_auth;
  t.pc_cr_max = s.pc == map.cr_max();
  return t;
}

class trace_error : public error {
public:
  trace_error(const std::string& what, std::size_t line)
      : error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct trace_file {
  std::string construction;
  memory_map map;
  trace steps;
};

inline void write_trace(std::ostream& os, std::string_view construction, const memory_map& map, const trace& steps) {
  auto hex = [](address a) { return address_fault::to_hex_address(a); };
  os << "# construction=" << construction << "\n";
  os << "# layout address_space=0x" << hex(static_cast<address>(map.address_space)) << " ar_min=0x"
     << hex(map.ar.first) << " ar_max=0x" << hex(map.ar.last) << " lmt_min=0x" << hex(map.lmt.first)
     << " lmt_max=0x" << hex(map.lmt.last) << " mr_min=0x" << hex(map.mr.first) << " mr_max=0x"
     << hex(map.mr.last) << " cr_min=0x" << hex(map.cr.first) << " cr_max=0x" << hex(map.cr.last)
     << " cr_auth=0x" << hex(map.cr_auth) << "\n";
  os << "# cycle\tpc\tr_en\tw_en\td_addr\tdma_en\tdma_addr\tirq\treset\tset_lmt\tup_lmt\tfsm_state\n";
  for (const auto& t : steps) {
    const auto& s = t.signals;
    os << s.cycle << '\t' << hex(s.pc) << '\t' << int{s.r_en} << '\t' << int{s.w_en} << '\t' << hex(s.d_addr)
       << '\t' << int{s.dma_en} << '\t' << hex(s.dma_addr) << '\t' << int{s.irq} << '\t' << int{t.outputs.reset}
       << '\t' << int{t.outputs.set_lmt} << '\t' << int{t.outputs.up_lmt} << '\t' << t.fsm_state << '\n';
  }
}

/// Parses a trace file. The layout comes from the header unless `layout_override` is given.
inline trace_file read_trace(std::istream& is, const memory_map* layout_override = nullptr) {
  trace_file out;
  bool have_layout = false;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;

  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view body = config::trim(std::string_view(line).substr(1));
      if (body.starts_with("construction=")) {
        out.construction = std::string(body.substr(13));
      } else if (body.starts_with("layout ")) {
        std::vector<config::entry> entries;
        for (auto kv : config::split_ws(body.substr(7))) {
          auto eq = kv.find('=');
          if (eq == std::string_view::npos) throw trace_error("malformed layout field", line_no);
          entries.push_back({std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)), line_no});
        }
        try {
          out.map = parse_layout(entries, memory_map{});
        } catch (const config_error& e) {
          throw trace_error(e.what(), line_no);
        }
        have_layout = true;
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 12)
      throw trace_error("expected 12 tab-separated fields, got " + std::to_string(fields.size()), line_no);
    rows.push_back(std::move(fields));
    row_lines.push_back(line_no);
  }

  if (layout_override) {
    out.map = *layout_override;
    have_layout = true;
  }
  if (!have_layout) throw trace_error("no layout header and no layout supplied", line_no);

  out.steps.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    const auto ln = row_lines[r];
    auto bit = [&](std::size_t i) {
      if (fields[i] == "0") return false;
      if (fields[i] == "1") return true;
      throw trace_error("field " + std::to_string(i + 1) + " must be 0 or 1", ln);
    };
    auto num = [&](std::size_t i) {
      try {
        return config::parse_uint(fields[i], ln);
      } catch (const config_error&) {
        throw trace_error("field " + std::to_string(i + 1) + " is not a number", ln);
      }
    };
    auto addr = [&](std::size_t i) {
      try {
        return config::parse_address(fields[i], ln);
      } catch (const config_error&) {
        throw trace_error("field " + std::to_string(i + 1) + " is not a hex address", ln);
      }
    };
    signal_state s;
    s.cycle = num(0);
    s.pc = addr(1);
    s.r_en = bit(2);
    s.w_en = bit(3);
    s.d_addr = addr(4);
    s.dma_en = bit(5);
    s.dma_addr = addr(6);
    s.irq = bit(7);
    monitor_outputs o{bit(8), bit(9), bit(10)};
    out.steps.push_back(make_step(out.map, s, o, fields[11]));
  }
  return out;
}

} // namespace rata
