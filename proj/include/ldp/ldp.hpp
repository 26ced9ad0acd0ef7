//
// Copyright 2026 The ldpmean Authors
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
//

#pragma once

#include "ldp/errors.hpp"
#include "ldp/experiment.hpp"
#include "ldp/mean_known.hpp"
#include "ldp/mean_unknown.hpp"
#include "ldp/mechanisms.hpp"
#include "ldp/normal_math.hpp"
#include "ldp/quantile.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"
