// Copyright 2026 The qrng-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qrng/error.hpp"

namespace qrng {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kCorruption: return "corruption error";
    case ErrorKind::kTruncation: return "truncation error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kResource: return "resource error";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kFit: return "fit error";
    case ErrorKind::kLength: return "length error";
    case ErrorKind::kSampleSize: return "sample-size error";
    case ErrorKind::kBlockTooSmall: return "block too small";
    case ErrorKind::kSeed: return "seed error";
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kIo: return "I/O error";
  }
  return "error";
}

}  // namespace qrng
