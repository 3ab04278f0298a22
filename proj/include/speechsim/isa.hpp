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

#pragma once

// Abstract micro-op instruction set. Every op is one uop; loads and stores
// are the only ops that touch memory.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace speechsim {

using Cycle = std::int64_t;

enum class RegClass : std::uint8_t { Gp, Fp };

struct Register {
  RegClass cls = RegClass::Gp;
  std::uint8_t index = 0;

  static constexpr Register gp(std::uint8_t i) { return {RegClass::Gp, i}; }
  static constexpr Register fp(std::uint8_t i) { return {RegClass::Fp, i}; }

  friend constexpr auto operator<=>(const Register&, const Register&) = default;

  std::string name() const;
};

inline constexpr int kRegsPerClass = 16;

// x86-flavoured aliases used by the gadget builders.
namespace reg {
inline constexpr Register rax = Register::gp(0);
inline constexpr Register rbx = Register::gp(1);
inline constexpr Register rcx = Register::gp(2);
inline constexpr Register rdx = Register::gp(3);
inline constexpr Register rsi = Register::gp(4);
inline constexpr Register rdi = Register::gp(5);
inline constexpr Register rbp = Register::gp(6);
inline constexpr Register rsp = Register::gp(7);
inline constexpr Register r8 = Register::gp(8);
inline constexpr Register r9 = Register::gp(9);
inline constexpr Register r10 = Register::gp(10);
inline constexpr Register r11 = Register::gp(11);
inline constexpr Register r12 = Register::gp(12);
inline constexpr Register r13 = Register::gp(13);
inline constexpr Register r14 = Register::gp(14);
inline constexpr Register r15 = Register::gp(15);
inline constexpr Register xmm0 = Register::fp(0);
inline constexpr Register xmm1 = Register::fp(1);
}  // namespace reg

enum class OpKind : std::uint8_t {
  AluAdd,
  AluSub,
  Load,
  Store,
  FpMovapd,
  FpAddpd,
  FpMulpd,
  Cpuid,
  BranchCond,
  BranchIndirect,
  BoundCheck,
  RegPrivRead,
};

std::string_view to_string(OpKind k);
std::optional<OpKind> op_kind_from_string(std::string_view s);

enum class Segment : std::uint8_t { Ds, Ss, Cs, Es, Fs };

std::string_view to_string(Segment s);
std::optional<Segment> segment_from_string(std::string_view s);

enum class SysReg : std::uint8_t { Cr4, Msr1a2 };

std::string_view to_string(SysReg r);
std::optional<SysReg> sysreg_from_string(std::string_view s);

struct MemOperand {
  Register base;
  std::optional<Register> index;
  std::uint8_t scale = 1;
  std::int64_t displacement = 0;
  Segment segment = Segment::Ds;

  friend bool operator==(const MemOperand&, const MemOperand&) = default;
};

struct BranchMeta {
  // Empty label means fall-through.
  std::string predicted_target;
  // BranchCond: label taken when the source register is non-zero.
  // BranchIndirect: unused, the target op index is read from srcs[0].
  std::string taken_target;

  friend bool operator==(const BranchMeta&, const BranchMeta&) = default;
};

// A BoundCheck op that loads a segment register instead of checking an
// array bound. The descriptor is looked up by selector in the environment.
struct SegmentLoad {
  Segment target = Segment::Ds;
  std::uint16_t selector = 0;

  friend bool operator==(const SegmentLoad&, const SegmentLoad&) = default;
};

struct MicroOp {
  OpKind kind = OpKind::AluAdd;
  std::vector<Register> srcs;
  std::optional<Register> dst;
  std::optional<MemOperand> mem;
  std::optional<std::int64_t> imm;
  std::optional<BranchMeta> branch;
  std::optional<SegmentLoad> seg_load;
  std::optional<SysReg> sysreg;

  friend bool operator==(const MicroOp&, const MicroOp&) = default;

  bool is_memory() const { return kind == OpKind::Load || kind == OpKind::Store; }
  bool is_fp() const {
    return kind == OpKind::FpMovapd || kind == OpKind::FpAddpd || kind == OpKind::FpMulpd;
  }
  bool is_branch() const {
    return kind == OpKind::BranchCond || kind == OpKind::BranchIndirect;
  }

  // All registers read, including address registers.
  std::vector<Register> reads() const;
};

class IsaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public IsaError {
 public:
  ParseError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

// Program-ordered op list plus labels and declared live-in registers.
struct InstrSeq {
  std::vector<MicroOp> ops;
  std::map<std::string, std::size_t> labels;
  std::map<Register, std::uint64_t> live_ins;

  std::size_t size() const { return ops.size(); }
  bool empty() const { return ops.empty(); }

  // Index of a label; the empty label is not valid here.
  std::size_t resolve(const std::string& label) const;

  friend bool operator==(const InstrSeq&, const InstrSeq&) = default;
};

// Fluent builder used by the gadget templates and tests.
class SeqBuilder {
 public:
  SeqBuilder& live_in(Register r, std::uint64_t value);
  SeqBuilder& label(const std::string& name);

  SeqBuilder& add_imm(Register r, std::int64_t imm);
  SeqBuilder& sub_imm(Register r, std::int64_t imm);
  SeqBuilder& add_reg(Register dst, Register src);
  SeqBuilder& load(Register dst, MemOperand mem);
  SeqBuilder& store_imm(std::int64_t value, MemOperand mem);
  SeqBuilder& store_reg(Register value, MemOperand mem);
  SeqBuilder& movapd(Register dst, Register src);
  SeqBuilder& addpd(Register dst, Register src);
  SeqBuilder& mulpd(Register dst, Register src);
  SeqBuilder& cpuid();
  SeqBuilder& branch_cond(Register cond, const std::string& taken, const std::string& predicted);
  SeqBuilder& branch_indirect(Register target, const std::string& predicted);
  SeqBuilder& bound(Register dst, Register index, std::int64_t upper);
  SeqBuilder& load_segment(Register dst, Register passthrough, Segment target,
                           std::uint16_t selector);
  SeqBuilder& read_sysreg(Register dst, SysReg which);
  SeqBuilder& op(MicroOp op);

  std::size_t size() const { return seq_.ops.size(); }

  // Validates label targets and returns the sequence.
  InstrSeq build() const;

 private:
  InstrSeq seq_;
  std::vector<std::string> pending_labels_;
};

MemOperand mem_at(Register base, std::int64_t disp = 0, Segment seg = Segment::Ds);
MemOperand mem_at(Register base, Register index, std::uint8_t scale = 1,
                  std::int64_t disp = 0, Segment seg = Segment::Ds);

// Per-op producer sets. deps[j] holds the indices i < j that j waits on.
struct DependencyGraph {
  std::vector<std::vector<std::size_t>> deps;
  // Store feeding each load through store-to-load forwarding, if any.
  std::vector<std::optional<std::size_t>> store_source;

  std::size_t longest_path(std::size_t from, std::size_t to) const;
};

// Throws IsaError listing the register when an op reads a register that
// is neither written earlier nor declared live-in.
DependencyGraph build_dependency_graph(const InstrSeq& seq);

// Suffix after the last CPUID (the whole sequence when there is none).
InstrSeq effective_gadget_after_cpuid(const InstrSeq& seq);

// Textual fixture format, one uop per line, AT&T operand order.
InstrSeq parse_seq(std::string_view text);
std::string format_seq(const InstrSeq& seq);
std::string format_op(const MicroOp& op);

}  // namespace speechsim
