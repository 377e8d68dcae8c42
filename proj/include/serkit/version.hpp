// serkit/version.hpp
//
// Copyright 2026 The serkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SERKIT_VERSION_HPP_
#define SERKIT_VERSION_HPP_

namespace serkit {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever the on-disk checkpoint layout changes. Loaders refuse
// containers written with a different format version.
inline constexpr unsigned kCheckpointFormatVersion = 1;

}  // namespace serkit

#endif  // SERKIT_VERSION_HPP_
