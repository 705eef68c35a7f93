#include "feval/losses.hpp"

#include <string>

#include "feval/errors.hpp"

namespace feval {

double loss(LossKind kind, double truth, double prediction) {
  switch (kind) {
    case LossKind::squared_error: {
      const double d = truth - prediction;
      return d * d;
    }
    case LossKind::brier: {
      if (!(truth >= 0.0 && truth <= 1.0) || !(prediction >= 0.0 && prediction <= 1.0)) {
        throw DomainError("brier loss requires truth and prediction in [0, 1], got (" +
                          std::to_string(truth) + ", " + std::to_string(prediction) + ")");
      }
      const double miss = 1.0 - prediction;
      return truth * miss * miss + (1.0 - truth) * prediction * prediction;
    }
  }
  throw DomainError("unknown loss kind");
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::brier ? "brier" : "squared_error";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared_error" || name == "squared-error" || name == "mse") {
    return LossKind::squared_error;
  }
  if (name == "brier") return LossKind::brier;
  throw DomainError("unknown loss '" + std::string(name) + "' (expected squared_error or brier)");
}

}  // namespace feval
