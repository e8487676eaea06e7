#MC_CHUNK_SIZE = 2000
#ZERO_TEST_POINTS = 256
