#include <pybind11/pybind11.h>
PYBIND11_MODULE(_drift, m) { m.doc() = "stub"; }
