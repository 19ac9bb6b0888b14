#pragma kernel covmean params(M=3, N=4)
long data[N][M];
long mean[M];

for (int j = 0; j < M; j++) {
  // comp_ID: comp00
  mean[j] = 0;
  for (int i = 0; i < N; i++)
    // comp_ID: comp01
    mean[j] += data[i][j];
  // comp_ID: comp02
  mean[j] = mean[j] / N;
}
