#pragma once

namespace pireg {

// Execution policy for the data-parallel kernels. Every kernel has a plain
// serial loop kept as the reference path; the parallel path must produce
// bit-identical results (per-slot writes, order-insensitive reductions only).
enum class Exec { serial, parallel };

}  // namespace pireg
