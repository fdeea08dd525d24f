#include "energynet/errors.hpp"

namespace energynet {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg;
        for (const auto& v : violations) {
          if (!msg.empty()) msg += "; ";
          msg += v;
        }
        return msg.empty() ? std::string("validation failed") : msg;
      }()),
      violations_(std::move(violations)) {}

ValidationError::ValidationError(const std::string& violation)
    : ValidationError(std::vector<std::string>{violation}) {}

}  // namespace energynet
