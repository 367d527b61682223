// Copyright 2026 The semiweak Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "semiweak/core.hpp"
#include "semiweak/losses.hpp"
#include "semiweak/count_decoder.hpp"
#include "semiweak/assignment.hpp"
#include "semiweak/metrics.hpp"
#include "semiweak/model.hpp"
#include "semiweak/pipeline.hpp"
#include "semiweak/train.hpp"
#include "semiweak/datagen.hpp"
#include "semiweak/eval.hpp"
#include "semiweak/config.hpp"
#include "semiweak/io.hpp"
