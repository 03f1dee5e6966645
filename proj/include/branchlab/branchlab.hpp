// Copyright 2026 The branchlab Authors
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


#pragma once

#include "branchlab/branching.hpp"
#include "branchlab/demos.hpp"
#include "branchlab/error.hpp"
#include "branchlab/exact.hpp"
#include "branchlab/hilbert.hpp"
#include "branchlab/io.hpp"
#include "branchlab/measures.hpp"
#include "branchlab/randomness.hpp"
#include "branchlab/record.hpp"
#include "branchlab/rng.hpp"
#include "branchlab/selection.hpp"
#include "branchlab/theorems.hpp"
