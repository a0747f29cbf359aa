// Copyright 2026 The riomark Authors
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

#include "riomark/bayes.hpp"
#include "riomark/classifier.hpp"
#include "riomark/csv.hpp"
#include "riomark/diagnostics.hpp"
#include "riomark/error.hpp"
#include "riomark/estimator.hpp"
#include "riomark/ingest.hpp"
#include "riomark/manifest.hpp"
#include "riomark/pipeline.hpp"
#include "riomark/report_io.hpp"
#include "riomark/rng.hpp"
#include "riomark/stats.hpp"
#include "riomark/textprep.hpp"
#include "riomark/tokenize.hpp"
#include "riomark/unicode.hpp"
#include "riomark/version.hpp"
