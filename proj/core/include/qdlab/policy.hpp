#pragma once

#include "qdlab/types.hpp"

#include <functional>
#include <string>

namespace qdlab {

/// Feedback control x -> control index.
class MarkovPolicy {
public:
    MarkovPolicy() = default;
    static MarkovPolicy constant(std::size_t control, std::string label = {});
    static MarkovPolicy feedback(std::function<std::size_t(const Vec&)> map, std::string label);

    [[nodiscard]] std::size_t operator()(const Vec& x) const { return map_ ? map_(x) : constant_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] bool is_constant() const noexcept { return !map_; }

private:
    std::size_t constant_ = 0;
    std::function<std::size_t(const Vec&)> map_;
    std::string label_;
};

}  // namespace qdlab
