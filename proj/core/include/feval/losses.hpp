#pragma once

#include <string>
#include <string_view>

namespace feval {

enum class LossKind { squared_error, brier };

// squared_error: (truth - prediction)^2.
// brier: expected Brier score of `prediction` when the event occurs with
// probability `truth`, i.e. truth * (1 - prediction)^2 + (1 - truth) * prediction^2.
// Both arguments must lie in [0, 1] for brier (DomainError otherwise).
double loss(LossKind kind, double truth, double prediction);

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

}  // namespace feval
