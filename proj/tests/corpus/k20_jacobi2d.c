#pragma kernel jacobi2d params(T=2, N=5)
long A[N][N];
long B[N][N];

for (int t = 0; t < T; t++) {
  for (int i = 1; i < N - 1; i++)
    for (int j = 1; j < N - 1; j++)
      // comp_ID: comp00
      B[i][j] = A[i][j] + A[i][j - 1] + A[i][j + 1] + A[i + 1][j] + A[i - 1][j];
  for (int i = 1; i < N - 1; i++)
    for (int j = 1; j < N - 1; j++)
      // comp_ID: comp01
      A[i][j] = B[i][j];
}
