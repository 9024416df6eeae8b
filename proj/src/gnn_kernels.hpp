// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "cfgnn/gnn.hpp"

namespace cfgnn::detail {

/// y (n x out) = x (n x in) W^T + b.
void apply_linear(const double* params, const LinearRef& ref, const double* x, std::size_t n, double* y,
                  FlopCounter* flops);

/// One attention layer over all nodes. `trace` may be null.
void run_layer(const HeteroGraph& graph, const GnnModel& model, std::size_t layer, const double* in, double* out,
               LayerTrace* trace, FlopCounter* flops);

}  // namespace cfgnn::detail
