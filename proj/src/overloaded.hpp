#pragma once

namespace prolearn {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace prolearn
