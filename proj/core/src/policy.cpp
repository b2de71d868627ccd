#include "qdlab/policy.hpp"

namespace qdlab {

MarkovPolicy MarkovPolicy::constant(std::size_t control, std::string label) {
    MarkovPolicy p;
    p.constant_ = control;
    p.label_ = label.empty() ? "control-" + std::to_string(control) : std::move(label);
    return p;
}

MarkovPolicy MarkovPolicy::feedback(std::function<std::size_t(const Vec&)> map, std::string label) {
    MarkovPolicy p;
    p.map_ = std::move(map);
    p.label_ = std::move(label);
    return p;
}

}  // namespace qdlab
