/*
 * Copyright 2026 The OCAE Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ocae/error.h"

namespace ocae {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kInsufficientData:
      return "insufficient-data";
    case ErrorKind::kSchema:
      return "schema";
    case ErrorKind::kCorrupt:
      return "corrupt";
    case ErrorKind::kDivergence:
      return "divergence";
    case ErrorKind::kConflict:
      return "conflict";
  }
  return "unknown";
}

}  // namespace ocae
