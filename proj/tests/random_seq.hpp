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

// Random short straight-line sequences over a small fixed environment.

#include <random>

#include "speechsim/isa.hpp"
#include "speechsim/memsys.hpp"
#include "speechsim/variants.hpp"

namespace speechsim::gen {

struct RandomCase {
  InstrSeq seq;
  MemEnvironment env;
};

// Eight pages: legal, kernel, not-present, read-only, reserved, legal,
// legal, legal; random levels and TLB state. Page values are small so
// loaded values can serve as indexes.
inline MemEnvironment random_env(std::mt19937_64& rng) {
  MemEnvironment env;
  for (int i = 0; i < 8; ++i) {
    const std::uint64_t page = 0x100000 + static_cast<std::uint64_t>(i) * 0x10000;
    PageTableEntry pte;
    if (i == 1) pte.us = false;
    if (i == 2) pte.present = false;
    if (i == 3) pte.rw = false;
    if (i == 4) pte.reserved_set = true;
    env.map_page(page, pte);
    env.map_page(page + 0x1000, pte);
    preload(env, page, static_cast<CacheLevel>(rng() % 4));
    switch (rng() % 3) {
      case 0: preload_tlb(env, page); break;
      case 1: env.stlb_present.insert(page); break;
      default: break;
    }
    env.mem_values[page] = rng() % 64;
  }
  env.feature_state.cr0_ts = rng() % 4 == 0;
  env.system_registers[SysReg::Cr4] = 0x42;
  return env;
}

inline std::uint64_t page_addr(int i) { return 0x100000 + static_cast<std::uint64_t>(i) * 0x10000; }

// Up to max_ops ops; GP bases r8..r15 hold page addresses and are never
// written, data registers rax..rdx carry values.
inline InstrSeq random_seq(std::mt19937_64& rng, int max_ops, bool allow_cpuid = false) {
  using namespace reg;
  const Register data[] = {rax, rbx, rcx, rdx};
  const Register base[] = {r8, r9, r10, r11, r12, r13, r14, r15};
  SeqBuilder b;
  for (Register r : data) b.live_in(r, rng() % 16);
  for (int i = 0; i < 8; ++i) b.live_in(base[i], page_addr(i));
  b.live_in(xmm0, 2).live_in(xmm1, 3);
  const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_ops));
  for (int i = 0; i < n; ++i) {
    Register d = data[rng() % 4];
    Register s = data[rng() % 4];
    Register bp = base[rng() % 8];
    switch (rng() % 11) {
      case 0:
      case 1: rng() % 2 ? b.add_imm(d, 1) : b.sub_imm(d, 1); break;
      case 2: b.add_reg(d, s); break;
      case 3:
      case 4: b.load(d, mem_at(bp)); break;
      case 5: b.load(d, mem_at(bp, s, 1)); break;
      case 6: {
        // Store, sometimes followed by a forwarded load of the same slot.
        b.store_reg(s, mem_at(bp, 8));
        if (rng() % 2) b.load(d, mem_at(bp, 8));
        break;
      }
      case 7: rng() % 2 ? b.movapd(d, xmm0) : b.addpd(xmm1, xmm0); break;
      case 8: b.bound(d, s, static_cast<std::int64_t>(rng() % 16)); break;
      case 9: b.read_sysreg(d, SysReg::Cr4); break;
      default:
        if (allow_cpuid && rng() % 2) b.cpuid();
        else b.add_imm(d, 1);
        break;
    }
  }
  return b.build();
}

}  // namespace speechsim::gen
