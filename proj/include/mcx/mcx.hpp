/**
 * Copyright (c) 2026 The mcx authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "mcx/cpq.hpp"
#include "mcx/engine.hpp"
#include "mcx/error.hpp"
#include "mcx/index.hpp"
#include "mcx/index_io.hpp"
#include "mcx/lsh.hpp"
#include "mcx/model.hpp"
#include "mcx/rng.hpp"
#include "mcx/sa.hpp"
#include "mcx/select.hpp"
