#pragma once

#include "loadcnn/date.hpp"
#include "loadcnn/tensor.hpp"

namespace loadcnn {

/// One training instance: a week of history, the customer/calendar one-hots
/// and the 48-point target day. History and target are kWh and non-negative;
/// the id encoding carries exactly one 1 per 31-wide half.
struct Sample {
  Tensor history;    // [7,48]
  Tensor id_onehot;  // [62]
  Tensor month;      // [12]
  Tensor day;        // [31]
  Tensor week;       // [7]
  Tensor target;     // [48]
  int customer_index = 0;
  Date target_date;
};

}  // namespace loadcnn
