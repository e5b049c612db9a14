/*
 * Copyright 2026 The scax Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace scax;
using namespace scax::testing;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(JsonIo, FixturesRoundTrip) {
  for (const Workload& w : {dense17b(), moe40b()}) {
    EXPECT_EQ(read_model(Reader(to_json(w.model), "model")), w.model);
    ASSERT_TRUE(w.batch && w.parallelism);
    EXPECT_EQ(read_batch(Reader(to_json(*w.batch), "batch")), *w.batch);
    EXPECT_EQ(read_parallelism(Reader(to_json(*w.parallelism), "parallelism")), *w.parallelism);
  }
  for (const Topology& t : {dense_topo(), moe_topo()})
    EXPECT_EQ(read_topology_doc(to_json(t)), t);
  const Assumptions a;
  EXPECT_EQ(read_assumptions(Reader(to_json(a), "assumptions")), a);
}

TEST(JsonIo, MissingFieldNamesPath) {
  json j = json::parse(R"({"model": {"num_layers": 4, "ffn_dim": 16, "seq_len": 8}})");
  EXPECT_EQ(error_of([&] { read_workload(j); }), "model.hidden_dim: missing required field");
}

TEST(JsonIo, UnknownFieldRejected) {
  json j = json::parse(
      R"({"model": {"num_layers": 4, "hidden_dim": 8, "ffn_dim": 16, "seq_len": 8, "colour": 1}})");
  EXPECT_EQ(error_of([&] { read_workload(j); }), "model.colour: unknown field");
}

TEST(JsonIo, WrongTypeRejected) {
  json j = json::parse(R"({"model": {"num_layers": "four", "hidden_dim": 8, "ffn_dim": 16,
                           "seq_len": 8}})");
  EXPECT_EQ(error_of([&] { read_workload(j); }), "model.num_layers: expected an integer");
}

TEST(JsonIo, BadScheduleName) {
  json p = to_json(*dense17b().parallelism);
  p["schedule"] = "GPipe";
  EXPECT_NE(error_of([&] { read_parallelism(Reader(p, "parallelism")); }).find("parallelism.schedule"),
            std::string::npos);
}

TEST(JsonIo, UnreadableFile) {
  EXPECT_THROW(load_json("/nonexistent/x.json"), InputError);
}

TEST(JsonIo, BundledTopologiesLoad) {
  for (const char* name : {"a1-like.json", "b1-like.json", "two-building.json",
                           "dense-two-building.json"}) {
    const Topology t = read_topology_doc(load_json(fixture(name)));
    EXPECT_EQ(t.num_buildings(), 2) << name;
    EXPECT_EQ(t.world_size() % t.gpus_per_server, 0) << name;
  }
}

TEST(JsonIo, MoeWorkloadFitsSeriesTopologies) {
  const Workload w = moe40b();
  const Topology a1 = read_topology_doc(load_json(fixture("a1-like.json")));
  EXPECT_TRUE(validate_config(w.model, *w.batch, *w.parallelism, a1).empty());
  // Four zones per building split the reference expert group.
  const Topology b1 = read_topology_doc(load_json(fixture("b1-like.json")));
  const auto viol = validate_config(w.model, *w.batch, *w.parallelism, b1);
  ASSERT_EQ(viol.size(), 1u);
  EXPECT_EQ(viol[0].code, "degree.ep_zone");
  ExploreOptions opt;
  opt.microbatch_sizes = {1};
  opt.schedules = {Schedule::DoraPP};
  EXPECT_TRUE(explore(w.model, *w.batch, b1, {}, opt).feasible());
}
