/*
 * Copyright 2026 The speechsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Text fixture format for instruction sequences.
//
//   .livein %rax, 0x42000
//   top:
//   add $1, %rax
//   movq fs:0x10(%rsi,%rdi,8), %rax
//   movq $0x42000, (%rcx)
//   jnz %rdx, done, predict=next
//   jmp *%rax, predict=top
//   bound %rdi, $255, %rdi
//   lseg %ss, $0x18, %rsi, %rsi
//   rdsys %cr4, %rax
//
// Comments start with '#', ';' or "//".

#include <cctype>
#include <charconv>
#include <sstream>

#include "speechsim/isa.hpp"

namespace speechsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_comment(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
    if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '/') return s.substr(0, i);
  }
  return s;
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  auto last = trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

class LineParser {
 public:
  explicit LineParser(int line) : line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, msg); }

  std::int64_t number(std::string_view s) const {
    s = trim(s);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      base = 16;
      s.remove_prefix(2);
    }
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      fail("bad number '" + std::string(s) + "'");
    auto sv = static_cast<std::int64_t>(v);
    return neg ? -sv : sv;
  }

  std::int64_t immediate(std::string_view s) const {
    s = trim(s);
    if (s.empty() || s.front() != '$') fail("expected immediate, got '" + std::string(s) + "'");
    return number(s.substr(1));
  }

  Register reg(std::string_view s) const {
    s = trim(s);
    if (s.empty() || s.front() != '%') fail("expected register, got '" + std::string(s) + "'");
    s.remove_prefix(1);
    for (std::uint8_t i = 0; i < kRegsPerClass; ++i) {
      if (Register::gp(i).name() == s) return Register::gp(i);
      if (Register::fp(i).name() == s) return Register::fp(i);
    }
    fail("unknown register '%" + std::string(s) + "'");
  }

  Register gp(std::string_view s) const {
    Register r = reg(s);
    if (r.cls != RegClass::Gp) fail("expected general-purpose register");
    return r;
  }

  Register fp(std::string_view s) const {
    Register r = reg(s);
    if (r.cls != RegClass::Fp) fail("expected xmm register");
    return r;
  }

  bool is_mem(std::string_view s) const { return s.find('(') != std::string_view::npos; }

  MemOperand mem(std::string_view s) const {
    s = trim(s);
    MemOperand m;
    if (auto colon = s.find(':'); colon != std::string_view::npos) {
      auto seg = segment_from_string(trim(s.substr(0, colon)));
      if (!seg) fail("unknown segment '" + std::string(s.substr(0, colon)) + "'");
      m.segment = *seg;
      s = trim(s.substr(colon + 1));
    }
    auto open = s.find('(');
    auto close = s.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
      fail("malformed memory operand");
    if (auto disp = trim(s.substr(0, open)); !disp.empty()) m.displacement = number(disp);
    auto inner = split_operands(s.substr(open + 1, close - open - 1));
    if (inner.empty() || inner.size() > 3) fail("malformed memory operand");
    m.base = gp(inner[0]);
    if (inner.size() >= 2) m.index = gp(inner[1]);
    if (inner.size() == 3) {
      auto sc = number(inner[2]);
      if (sc != 1 && sc != 2 && sc != 4 && sc != 8) fail("scale must be 1, 2, 4 or 8");
      m.scale = static_cast<std::uint8_t>(sc);
    }
    return m;
  }

  std::string predict(std::string_view s) const {
    s = trim(s);
    constexpr std::string_view key = "predict=";
    if (!s.starts_with(key)) fail("expected predict=<label|next>");
    auto target = trim(s.substr(key.size()));
    if (target == "next") return {};
    return std::string(target);
  }

  void expect_count(const std::vector<std::string_view>& ops, std::size_t n,
                    std::string_view mnemonic) const {
    if (ops.size() != n)
      fail(std::string(mnemonic) + " expects " + std::to_string(n) + " operands");
  }

 private:
  int line_;
};

bool valid_label(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
  return true;
}

std::string fmt_num(std::int64_t v) {
  if (v > -4096 && v < 4096) return std::to_string(v);
  std::ostringstream os;
  if (v < 0) os << '-' << "0x" << std::hex << static_cast<std::uint64_t>(-v);
  else os << "0x" << std::hex << v;
  return os.str();
}

std::string fmt_mem(const MemOperand& m) {
  std::string out;
  if (m.segment != Segment::Ds) out += std::string(to_string(m.segment)) + ":";
  if (m.displacement != 0) out += fmt_num(m.displacement);
  out += "(%" + m.base.name();
  if (m.index) out += ",%" + m.index->name() + "," + std::to_string(m.scale);
  out += ")";
  return out;
}

}  // namespace

std::string format_op(const MicroOp& op) {
  auto r = [](Register x) { return "%" + x.name(); };
  switch (op.kind) {
    case OpKind::AluAdd:
    case OpKind::AluSub: {
      std::string m = op.kind == OpKind::AluAdd ? "add " : "sub ";
      if (op.imm) return m + "$" + fmt_num(*op.imm) + ", " + r(*op.dst);
      return m + r(op.srcs.at(1)) + ", " + r(*op.dst);
    }
    case OpKind::Load:
      return "movq " + fmt_mem(*op.mem) + ", " + r(*op.dst);
    case OpKind::Store:
      if (op.imm) return "movq $" + fmt_num(*op.imm) + ", " + fmt_mem(*op.mem);
      return "movq " + r(op.srcs.at(0)) + ", " + fmt_mem(*op.mem);
    case OpKind::FpMovapd:
      return "movapd " + r(op.srcs.at(0)) + ", " + r(*op.dst);
    case OpKind::FpAddpd:
      return "addpd " + r(op.srcs.at(1)) + ", " + r(*op.dst);
    case OpKind::FpMulpd:
      return "mulpd " + r(op.srcs.at(1)) + ", " + r(*op.dst);
    case OpKind::Cpuid:
      return "cpuid";
    case OpKind::BranchCond: {
      const auto& b = *op.branch;
      return "jnz " + r(op.srcs.at(0)) + ", " + b.taken_target +
             ", predict=" + (b.predicted_target.empty() ? "next" : b.predicted_target);
    }
    case OpKind::BranchIndirect: {
      const auto& b = *op.branch;
      return "jmp *" + r(op.srcs.at(0)) +
             ", predict=" + (b.predicted_target.empty() ? "next" : b.predicted_target);
    }
    case OpKind::BoundCheck:
      if (op.seg_load)
        return "lseg %" + std::string(to_string(op.seg_load->target)) + ", $" +
               fmt_num(op.seg_load->selector) + ", " + r(op.srcs.at(0)) + ", " + r(*op.dst);
      return "bound " + r(op.srcs.at(0)) + ", $" + fmt_num(*op.imm) + ", " + r(*op.dst);
    case OpKind::RegPrivRead:
      return "rdsys %" + std::string(to_string(*op.sysreg)) + ", " + r(*op.dst);
  }
  return "?";
}

std::string format_seq(const InstrSeq& seq) {
  std::ostringstream os;
  for (const auto& [r, v] : seq.live_ins) os << ".livein %" << r.name() << ", " << fmt_num(static_cast<std::int64_t>(v)) << '\n';
  std::multimap<std::size_t, std::string> by_index;
  for (const auto& [name, idx] : seq.labels) by_index.emplace(idx, name);
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    auto [lo, hi] = by_index.equal_range(i);
    for (auto it = lo; it != hi; ++it) os << it->second << ":\n";
    if (i < seq.size()) os << "  " << format_op(seq.ops[i]) << '\n';
  }
  return os.str();
}

InstrSeq parse_seq(std::string_view text) {
  SeqBuilder b;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    LineParser p(line_no);
    auto line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.back() == ':') {
      auto name = trim(line.substr(0, line.size() - 1));
      if (!valid_label(name)) p.fail("invalid label '" + std::string(name) + "'");
      try {
        b.label(std::string(name));
      } catch (const IsaError& e) {
        p.fail(e.what());
      }
      continue;
    }

    auto sp = line.find_first_of(" \t");
    auto mnemonic = line.substr(0, sp);
    auto rest = sp == std::string_view::npos ? std::string_view{} : trim(line.substr(sp));
    auto ops = split_operands(rest);

    if (mnemonic == ".livein") {
      p.expect_count(ops, 2, mnemonic);
      b.live_in(p.reg(ops[0]), static_cast<std::uint64_t>(p.number(ops[1])));
    } else if (mnemonic == "add" || mnemonic == "sub") {
      p.expect_count(ops, 2, mnemonic);
      Register dst = p.gp(ops[1]);
      if (!ops[0].empty() && ops[0].front() == '$') {
        auto imm = p.immediate(ops[0]);
        mnemonic == "add" ? b.add_imm(dst, imm) : b.sub_imm(dst, imm);
      } else {
        MicroOp op{.kind = mnemonic == "add" ? OpKind::AluAdd : OpKind::AluSub,
                   .srcs = {dst, p.gp(ops[0])},
                   .dst = dst};
        b.op(op);
      }
    } else if (mnemonic == "movq" || mnemonic == "mov") {
      p.expect_count(ops, 2, mnemonic);
      if (p.is_mem(ops[0])) {
        b.load(p.gp(ops[1]), p.mem(ops[0]));
      } else if (p.is_mem(ops[1])) {
        if (!ops[0].empty() && ops[0].front() == '$') b.store_imm(p.immediate(ops[0]), p.mem(ops[1]));
        else b.store_reg(p.gp(ops[0]), p.mem(ops[1]));
      } else {
        p.fail("movq needs one memory operand");
      }
    } else if (mnemonic == "movapd") {
      p.expect_count(ops, 2, mnemonic);
      b.movapd(p.reg(ops[1]), p.fp(ops[0]));
    } else if (mnemonic == "addpd" || mnemonic == "mulpd") {
      p.expect_count(ops, 2, mnemonic);
      mnemonic == "addpd" ? b.addpd(p.fp(ops[1]), p.fp(ops[0])) : b.mulpd(p.fp(ops[1]), p.fp(ops[0]));
    } else if (mnemonic == "cpuid") {
      p.expect_count(ops, 0, mnemonic);
      b.cpuid();
    } else if (mnemonic == "jnz") {
      p.expect_count(ops, 3, mnemonic);
      auto taken = std::string(trim(ops[1]));
      if (!valid_label(taken)) p.fail("invalid branch target '" + taken + "'");
      b.branch_cond(p.gp(ops[0]), taken, p.predict(ops[2]));
    } else if (mnemonic == "jmp") {
      p.expect_count(ops, 2, mnemonic);
      auto target = trim(ops[0]);
      if (target.empty() || target.front() != '*') p.fail("indirect jump needs '*%reg'");
      b.branch_indirect(p.gp(target.substr(1)), p.predict(ops[1]));
    } else if (mnemonic == "bound") {
      p.expect_count(ops, 3, mnemonic);
      b.bound(p.gp(ops[2]), p.gp(ops[0]), p.immediate(ops[1]));
    } else if (mnemonic == "lseg") {
      p.expect_count(ops, 4, mnemonic);
      auto segname = trim(ops[0]);
      if (segname.empty() || segname.front() != '%') p.fail("expected segment register");
      auto seg = segment_from_string(segname.substr(1));
      if (!seg) p.fail("unknown segment register '" + std::string(segname) + "'");
      b.load_segment(p.gp(ops[3]), p.gp(ops[2]), *seg,
                     static_cast<std::uint16_t>(p.immediate(ops[1])));
    } else if (mnemonic == "rdsys") {
      p.expect_count(ops, 2, mnemonic);
      auto name = trim(ops[0]);
      if (name.empty() || name.front() != '%') p.fail("expected system register");
      auto which = sysreg_from_string(name.substr(1));
      if (!which) p.fail("unknown system register '" + std::string(name) + "'");
      b.read_sysreg(p.gp(ops[1]), *which);
    } else {
      p.fail("unknown mnemonic '" + std::string(mnemonic) + "'");
    }
  }
  try {
    return b.build();
  } catch (const ParseError&) {
    throw;
  } catch (const IsaError& e) {
    throw ParseError(line_no, e.what());
  }
}

}  // namespace speechsim
