#include <doctest.h>
TEST_SUITE("checkpoint") {}
