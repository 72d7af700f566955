/*
 * Copyright 2026 The credyn Authors.
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

#pragma once

#include "credyn/common.hpp"
#include "credyn/dynamics.hpp"
#include "credyn/evalkit.hpp"
#include "credyn/feature_matrix.hpp"
#include "credyn/featselect.hpp"
#include "credyn/featurelab.hpp"
#include "credyn/gbdt.hpp"
#include "credyn/graph.hpp"
#include "credyn/graphstats.hpp"
#include "credyn/io.hpp"
#include "credyn/panel.hpp"
#include "credyn/parallel.hpp"
#include "credyn/report.hpp"
#include "credyn/shap.hpp"
#include "credyn/synthpop.hpp"
